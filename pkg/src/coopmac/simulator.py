"""Monte Carlo estimate of the time shares, phase by phase.

The simulator walks the same chain that :func:`coopmac.mac.build_chain`
hands to the analytic integration, so the two can only disagree through
sampling noise or a bug in the integration itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mac import (
    SHARE_NAMES,
    CollisionModel,
    DegenerateInputError,
    MacParams,
    MacScheme,
    PhaseKind,
    TimeShares,
    build_chain,
    integrate_chain,
)

N_BATCHES = 100
Z_LIMIT = 4.0
# Differences this small count as exact when the standard error is zero.
EXACT_TOL = 1e-12

_ACCRUALS = ("success_f", "success_n", "success_r", "f_tx", "n_tx", "idle", "collision")
_PATTERNS = ((False, False), (False, True), (True, False), (True, True))


@dataclass(frozen=True)
class SimConfig:
    scheme: MacScheme
    params: MacParams
    sigma: float
    n_phases: int = 10**6
    seed: int = 0
    collision_model: CollisionModel = CollisionModel.LITERAL

    def __post_init__(self):
        object.__setattr__(self, "scheme", MacScheme(self.scheme))
        object.__setattr__(self, "collision_model", CollisionModel(self.collision_model))
        if not isinstance(self.params, MacParams):
            raise TypeError("params must be a MacParams")
        if int(self.n_phases) != self.n_phases or self.n_phases < 1:
            raise ValueError(f"n_phases must be a positive integer, got {self.n_phases!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma!r}")
        if self.scheme is MacScheme.DIRECT_ACCESS and self.params.t_r != 0:
            raise ValueError("direct access never relays: t_r must be 0")


@dataclass(frozen=True)
class SimStats:
    """Empirical shares with batch-means standard errors, floored at the
    resolution of a single phase.

    ``state2_fraction`` is the fraction of phases begun in the second chain
    state (``nan`` for one-state chains).
    """

    shares: TimeShares
    stderr: TimeShares
    counts: dict
    n_phases: int
    state2_fraction: float
    state2_stderr: float


def _tables(chain):
    """Per (state, pattern) phase index, next state and accruals."""
    phases = []
    phase_id = np.zeros((2, 4), dtype=np.int64)
    next_state = np.zeros((2, 4), dtype=np.int64)
    for s in range(2):
        state = chain.states[min(s, len(chain.states) - 1)]
        for c, pattern in enumerate(_PATTERNS):
            phase = state.phase_for(pattern)
            if phase not in phases:
                phases.append(phase)
            phase_id[s, c] = phases.index(phase)
            next_state[s, c] = min(phase.next_state, len(chain.states) - 1)
    accrual = np.array([[float(getattr(p, k)) for k in _ACCRUALS] for p in phases])
    return phases, phase_id, next_state, accrual


def _state_path(next_state, codes, start=0):
    """States in which each phase begins.

    Every step maps {0, 1} to {0, 1}: constant (reset), identity or swap.
    The state after step k is the last reset's value flipped by the number
    of swaps since then.
    """
    a = next_state[0, codes]
    b = next_state[1, codes]
    reset = a == b
    swaps = np.cumsum((a == 1) & (b == 0))
    idx = np.arange(codes.size)
    last = np.maximum.accumulate(np.where(reset, idx, -1))
    anchor = np.where(last >= 0, a[np.maximum(last, 0)], start)
    before = np.where(last >= 0, swaps[np.maximum(last, 0)], 0)
    after = anchor ^ ((swaps - before) & 1)
    return np.concatenate([[start], after[:-1]])


def _batch_ratio(num, den, den_total=None):
    """Overall ratio and its batch-means standard error."""
    total = num.sum(axis=0) / (den.sum() if den_total is None else den_total)
    if den.size < 2 or np.any(den <= 0):
        return total, np.zeros_like(total)
    per_batch = num / den[:, None] if num.ndim == 2 else num / den
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(den.size)
    return total, se


def simulate(config: SimConfig) -> SimStats:
    chain = build_chain(config.scheme, config.params, config.sigma, collision_model=config.collision_model)
    phases, phase_id, next_state, accrual = _tables(chain)
    tau = config.params.tau
    n = int(config.n_phases)

    rng = np.random.Generator(np.random.PCG64(int(config.seed)))
    sends = rng.random((n, 2)) < tau
    codes = 2 * sends[:, 0] + sends[:, 1]
    if len(chain.states) == 1:
        states = np.zeros(n, dtype=np.int64)
    else:
        states = _state_path(next_state, codes)
    pid = phase_id[states, codes]

    n_batches = min(N_BATCHES, n)
    batch = np.arange(n) * n_batches // n
    counts = np.bincount(batch * len(phases) + pid, minlength=n_batches * len(phases)).reshape(n_batches, len(phases))
    sums = counts @ accrual
    acc = dict(zip(_ACCRUALS, sums.T))
    duration = acc["success_f"] + acc["success_n"] + acc["success_r"] + acc["idle"] + acc["collision"]
    if not duration.sum() > 0:
        raise DegenerateInputError("simulated time is zero (tau = 0 with sigma = 0?)")

    num = np.column_stack([acc["success_f"], acc["success_n"], acc["success_r"], acc["f_tx"], acc["n_tx"], acc["idle"], acc["collision"]])
    # Summing the column totals keeps a share that fills all the time at exactly 1.
    col = num.sum(axis=0)
    total_time = col[0] + col[1] + col[2] + col[5] + col[6]
    values, se = _batch_ratio(num, duration, total_time)
    # A share whose phases never occurred gets zero batch variance; no
    # estimate resolves better than one occurrence of its largest accrual.
    possible = np.array([p.prob > 0 for p in phases])
    largest = accrual[possible].max(axis=0) if possible.any() else np.zeros(len(_ACCRUALS))
    se = np.maximum(se, largest / total_time)
    shares = TimeShares(*map(float, values))
    stderr = TimeShares(*map(float, se))

    by_kind = dict.fromkeys(PhaseKind, 0)
    totals = counts.sum(axis=0)
    for phase, count in zip(phases, totals):
        by_kind[phase.kind] += int(count)

    if len(chain.states) == 2:
        in_two = np.bincount(batch, weights=states, minlength=n_batches)
        per = np.bincount(batch, minlength=n_batches).astype(float)
        frac, frac_se = _batch_ratio(in_two, per)
        state2, state2_se = float(frac), max(float(frac_se), 1.0 / n)
    else:
        state2, state2_se = math.nan, math.nan
    return SimStats(shares, stderr, by_kind, n, state2, state2_se)


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    simulated: float
    analytic: float
    stderr: float
    z: float
    rel_error: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    z_limit: float = Z_LIMIT
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", all(abs(r.z) <= self.z_limit for r in self.rows))

    def table(self) -> str:
        lines = [f"{'quantity':<10} {'simulated':>14} {'analytic':>14} {'stderr':>11} {'z':>8}"]
        for r in self.rows:
            lines.append(f"{r.name:<10} {r.simulated:>14.8f} {r.analytic:>14.8f} {r.stderr:>11.3e} {r.z:>8.3f}")
        lines.append("PASS" if self.passed else f"FAIL (|z| > {self.z_limit:g})")
        return "\n".join(lines)


def _row(name, sim, ana, se):
    diff = sim - ana
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if abs(diff) <= EXACT_TOL else math.copysign(math.inf, diff)
    rel = abs(diff) / abs(ana) if ana != 0 else abs(diff)
    return ComparisonRow(name, sim, ana, se, z, rel)


def compare(stats: SimStats, analytic: TimeShares, *, state2: float | None = None,
            z_limit: float = Z_LIMIT) -> ComparisonReport:
    """z-score of every share, and of state-2 occupancy when ``state2`` is given."""
    rows = [_row(name, getattr(stats.shares, name), float(getattr(analytic, name)), getattr(stats.stderr, name))
            for name in SHARE_NAMES]
    if state2 is not None:
        rows.append(_row("state2", stats.state2_fraction, float(state2), stats.state2_stderr))
    return ComparisonReport(tuple(rows), z_limit)


def analytic_reference(config: SimConfig) -> tuple[TimeShares, float | None]:
    """Analytic shares and second-state probability for ``config``."""
    chain = build_chain(config.scheme, config.params, config.sigma, collision_model=config.collision_model)
    pi2 = float(chain.stationary[1]) if len(chain.states) == 2 else None
    return integrate_chain(chain), pi2


def validate(config: SimConfig, *, z_limit: float = Z_LIMIT) -> ComparisonReport:
    analytic, pi2 = analytic_reference(config)
    return compare(simulate(config), analytic, state2=pi2, z_limit=z_limit)
