"""Command-line front end: eval, sweep-snr, sweep-beta, simulate.

Every command reads an optional flat JSON scenario file; command-line flags
override its keys.  Exit codes: 0 success, 1 validation failure, 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields

import numpy as np

from .channel import NetworkConfig
from .mac import CollisionModel, MacParams
from .optimize import OptSettings, improvement_from_rates, maximize
from .rates import COOPERATIVE, Scheme, evaluate
from .simulator import SimConfig, analytic_reference, compare, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_OPT_KEYS = tuple(f.name for f in fields(OptSettings))
SCENARIO_KEYS = frozenset({
    "snr_db", "power", "beta", "gamma", "sigma", "collision_model",
    "scheme", "schemes", "t_f", "t_n", "t_r", "tau",
    "snr_db_start", "snr_db_stop", "snr_db_step",
    "beta_start", "beta_stop", "beta_step",
    "n_phases", "seed", *_OPT_KEYS,
})
_SNR_AXIS = ("snr_db_start", "snr_db_stop", "snr_db_step")
_BETA_AXIS = ("beta_start", "beta_stop", "beta_step")

DEFAULTS = {
    "snr_db": 0.0, "beta": 0.5, "gamma": 2.0, "sigma": 0.002, "collision_model": "literal",
    "snr_db_start": -20.0, "snr_db_stop": 30.0, "snr_db_step": 1.0,
    "beta_start": 0.05, "beta_stop": 0.95, "beta_step": 0.05,
    "n_phases": 10**6, "seed": 0,
}


class UsageError(Exception):
    """Bad scenario file or flag combination (exit code 2)."""


def load_scenario(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read scenario {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"scenario {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("scenario must be a JSON object of key-value pairs")
    for key, value in data.items():
        if key not in SCENARIO_KEYS:
            raise UsageError(f"unknown scenario key {key!r}")
        if isinstance(value, dict) or (isinstance(value, list) and key != "schemes"):
            raise UsageError(f"scenario key {key!r} must be a scalar")
    return data


def _number(scenario, key, kind=float):
    value = scenario.get(key, DEFAULTS.get(key))
    if value is None:
        raise UsageError(f"missing required key {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"scenario key {key!r} must be a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise UsageError(f"scenario key {key!r} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _power(scenario) -> float:
    if "power" in scenario and "snr_db" in scenario:
        raise UsageError("give either 'power' or 'snr_db', not both")
    if "power" in scenario:
        return _number(scenario, "power")
    return 10.0 ** (_number(scenario, "snr_db") / 10.0)


def _config(scenario, power=None, beta=None) -> NetworkConfig:
    try:
        return NetworkConfig(
            power=_power(scenario) if power is None else power,
            beta=_number(scenario, "beta") if beta is None else beta,
            gamma=_number(scenario, "gamma"),
            sigma=_number(scenario, "sigma"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _enum(cls, scenario, key):
    value = scenario.get(key, DEFAULTS.get(key))
    try:
        return cls(value)
    except ValueError as exc:
        choices = ", ".join(m.value for m in cls)
        raise UsageError(f"scenario key {key!r}: {value!r} is not one of {choices}") from exc


def _settings(scenario) -> OptSettings:
    defaults = OptSettings()
    kwargs = {}
    for key in _OPT_KEYS:
        if key in scenario:
            kind = type(getattr(defaults, key))
            kwargs[key] = _number(scenario, key, int if kind is int else float)
    try:
        return OptSettings(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _params(scenario, scheme: Scheme) -> MacParams:
    for key in ("t_f", "tau"):
        if key not in scenario:
            raise UsageError(f"missing required key {key!r}")
    t_f, tau = _number(scenario, "t_f"), _number(scenario, "tau")
    t_n = _number(scenario, "t_n") if "t_n" in scenario else None
    if scheme is Scheme.DIRECT_LINK and t_n is None:
        t_n = 1.0 - t_f
    if t_n is None:
        raise UsageError("missing required key 't_n'")
    t_r = _number(scenario, "t_r") if "t_r" in scenario else max(0.0, 1.0 - t_f - t_n)
    try:
        return MacParams(t_f, t_n, t_r, tau)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _axis(scenario, keys, own, other) -> np.ndarray:
    for key in other:
        if key in scenario:
            raise UsageError(f"scenario key {key!r} belongs to the other sweep axis")
    start, stop, step = (_number(scenario, k) for k in keys)
    if not step > 0:
        raise UsageError(f"{own}_step must be > 0")
    if stop < start:
        raise UsageError(f"empty {own} range: stop < start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _sweep_schemes(scenario) -> list[Scheme]:
    names = scenario.get("schemes")
    if names is None:
        return list(Scheme)
    if not isinstance(names, list) or not names:
        raise UsageError("scenario key 'schemes' must be a nonempty list")
    chosen = {_enum(Scheme, {"scheme": n}, "scheme") for n in names}
    # The no-cooperation benchmark always needs both routing schemes.
    chosen |= {Scheme.DIRECT_LINK, Scheme.TWO_HOP}
    return [s for s in Scheme if s in chosen]


def _column(scheme: Scheme) -> str:
    return scheme.value.replace("-", "_")


def sweep_header(axis: str, schemes) -> list[str]:
    return ([axis] + [f"rate_{_column(s)}" for s in schemes] + ["c_nocoop"]
            + [f"gain_pct_{_column(s)}" for s in schemes if s in COOPERATIVE])


def sweep_row(config: NetworkConfig, schemes, settings, collision_model) -> tuple[dict, float, dict]:
    rates = {s: maximize(s, config, settings, collision_model=collision_model).best_rate for s in schemes}
    nocoop = max(rates[Scheme.DIRECT_LINK], rates[Scheme.TWO_HOP])
    gains = improvement_from_rates(rates) if nocoop > 0 else {s: math.nan for s in schemes}
    return rates, nocoop, gains


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_csv(rows, out):
    if out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
        return
    with open(out, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _sweep(scenario, axis_name, values, make_config, out):
    schemes = _sweep_schemes(scenario)
    settings = _settings(scenario)
    collision_model = _enum(CollisionModel, scenario, "collision_model")
    rows = [sweep_header(axis_name, schemes)]
    # Points run one after another, so rows come out in axis order.
    for value in values:
        rates, nocoop, gains = sweep_row(make_config(value), schemes, settings, collision_model)
        rows.append([_fmt(value)] + [_fmt(rates[s]) for s in schemes] + [_fmt(nocoop)]
                    + [_fmt(gains[s]) for s in schemes if s in COOPERATIVE])
    _write_csv(rows, out)
    return EXIT_OK


def cmd_eval(scenario, args) -> int:
    scheme = _enum(Scheme, scenario, "scheme")
    config = _config(scenario)
    params = _params(scenario, scheme)
    collision_model = _enum(CollisionModel, scenario, "collision_model")
    try:
        result = evaluate(scheme, config, params, collision_model=collision_model)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = {
        "scheme": scheme.value,
        "params": {"t_f": params.t_f, "t_n": params.t_n, "t_r": params.t_r, "tau": params.tau},
        "shares": {k: float(v) for k, v in result.shares.as_dict().items()},
        "c_f": result.c_f,
        "c_n": result.c_n,
        "min_rate": result.min_rate,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_sweep_snr(scenario, args) -> int:
    values = _axis(scenario, _SNR_AXIS, "snr_db", _BETA_AXIS)
    base = _config(scenario, power=1.0)
    return _sweep(scenario, "snr_db", values,
                  lambda db: NetworkConfig(10.0 ** (db / 10.0), base.beta, base.gamma, base.sigma), args.out)


def cmd_sweep_beta(scenario, args) -> int:
    values = _axis(scenario, _BETA_AXIS, "beta", _SNR_AXIS)
    if values[0] <= 0 or values[-1] >= 1:
        raise UsageError("beta range must lie inside (0, 1)")
    base = _config(scenario, beta=0.5)
    return _sweep(scenario, "beta", values,
                  lambda b: NetworkConfig(base.power, float(b), base.gamma, base.sigma), args.out)


def cmd_simulate(scenario, args) -> int:
    scheme = _enum(Scheme, scenario, "scheme")
    params = _params(scenario, scheme)
    try:
        sim = SimConfig(scheme.mac_scheme, params, _number(scenario, "sigma"),
                        n_phases=_number(scenario, "n_phases", int), seed=_number(scenario, "seed", int),
                        collision_model=_enum(CollisionModel, scenario, "collision_model"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    analytic, pi2 = analytic_reference(sim)
    if args.perturb_s_f:
        # Test hook: corrupt the model side so the failure path can be exercised.
        analytic = type(analytic)(**{**analytic.as_dict(), "s_f": analytic.s_f * (1.0 + args.perturb_s_f)})
    report = compare(simulate(sim), analytic, state2=pi2)
    text = report.table() + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


_OVERRIDES = (
    ("--beta", "beta", float),
    ("--snr-db", "snr_db", float),
    ("--sigma", "sigma", float),
    ("--gamma", "gamma", float),
    ("--scheme", "scheme", str),
    ("--seed", "seed", int),
    ("--n-phases", "n_phases", int),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coopmac", description="Max-min throughput of relaying schemes over a random-access MAC.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func, help_text in (
        ("eval", cmd_eval, "rates of one scheme at given packetsizes and tau (JSON)"),
        ("sweep-snr", cmd_sweep_snr, "optimized rates and gains over an SNR range (CSV)"),
        ("sweep-beta", cmd_sweep_beta, "optimized rates and gains over relay positions (CSV)"),
        ("simulate", cmd_simulate, "Monte Carlo check of the time shares (z-score table)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--scenario", metavar="FILE", help="flat JSON scenario file")
        for flag, key, kind in _OVERRIDES:
            p.add_argument(flag, dest=key, type=kind, default=None)
        p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
        if name == "simulate":
            p.add_argument("--perturb-s-f", dest="perturb_s_f", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        scenario = load_scenario(args.scenario)
        for _, key, _ in _OVERRIDES:
            value = getattr(args, key)
            if value is not None:
                if key == "snr_db":
                    scenario.pop("power", None)
                scenario[key] = value
        return args.func(scenario, args)
    except UsageError as exc:
        print(f"coopmac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
