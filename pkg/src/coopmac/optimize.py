"""Max-min rate optimization over packetsizes and transmission probability.

A full coarse grid over ``tau`` and the packetsize simplex serves as the
global pass; a deterministic pattern search polishes the best grid point.
Both passes evaluate candidate points in vectorized batches.

The objective is a minimum of smooth flow terms, so its optimum usually sits
on a ridge where a plain pattern search crawls.  Each poll therefore also
fits a linear model of every term from the poll values and proposes the
step that maximizes the modelled minimum (a small LP solved by vertex
enumeration).  Steps confined to the kinks of the collision length are
proposed as well.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .channel import NetworkConfig
from .mac import CollisionModel, MacParams, MacScheme, TimeShares, build_chain, integrate_chain
from .rates import RATE_FORMULA, Scheme, evaluate, flow_terms


class UndefinedImprovementError(ValueError):
    """The non-cooperative benchmark rate is zero."""


@dataclass(frozen=True)
class OptSettings:
    tau_grid_points: int = 199
    simplex_step: float = 0.02
    refine_iters: int = 100
    refine_shrink: float = 0.5
    min_step: float = 1e-10
    poll_directions: int = 26

    def __post_init__(self):
        if int(self.tau_grid_points) != self.tau_grid_points or self.tau_grid_points < 1:
            raise ValueError("tau_grid_points must be a positive integer")
        if not 0 < self.simplex_step <= 1:
            raise ValueError("simplex_step must lie in (0, 1]")
        if int(self.refine_iters) != self.refine_iters or self.refine_iters < 0:
            raise ValueError("refine_iters must be a nonnegative integer")
        if not 0 < self.refine_shrink < 1:
            raise ValueError("refine_shrink must lie in (0, 1)")
        if not self.min_step > 0:
            raise ValueError("min_step must be > 0")
        if int(self.poll_directions) != self.poll_directions or self.poll_directions < 4:
            raise ValueError("poll_directions must be an integer >= 4")


@dataclass(frozen=True)
class OptResult:
    scheme: Scheme
    best_params: MacParams
    best_rate: float
    best_shares: TimeShares
    evaluations: int
    flow_rates: tuple[float, float]
    grid_best_rate: float


def _simplex_grid(step: float, relay: bool):
    """(t_f, t_n) pairs in lexicographic order; t_n = 1 - t_f without relay."""
    k = int(np.floor(1.0 / step + 1e-9))
    ticks = np.arange(k + 1) * step
    if not relay:
        return ticks, 1.0 - ticks
    i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    keep = (i + j) <= k
    return ticks[i[keep]], ticks[j[keep]]


def tau_grid(points: int) -> np.ndarray:
    return np.arange(1, points + 1) / (points + 1)


def _packets(t_f, t_n, relay: bool):
    t_r = np.maximum(0.0, 1.0 - t_f - t_n) if relay else np.zeros_like(t_f)
    return t_r


def _batch_shares(mac: MacScheme, tau, t_f, t_n, relay: bool, sigma: float, collision_model) -> TimeShares:
    params = SimpleNamespace(t_f=t_f, t_n=t_n, t_r=_packets(t_f, t_n, relay), tau=tau)
    return integrate_chain(build_chain(mac, params, sigma, collision_model=collision_model), strict=False)


@functools.lru_cache(maxsize=32)
def _grid(mac: MacScheme, relay: bool, sigma: float, settings: OptSettings, collision_model):
    """Grid points and their shares; shares do not depend on power or position."""
    f, n = _simplex_grid(settings.simplex_step, relay)
    taus = tau_grid(settings.tau_grid_points)
    tau = np.repeat(taus, f.size)
    t_f = np.tile(f, taus.size)
    t_n = np.tile(n, taus.size)
    shares = _batch_shares(mac, tau, t_f, t_n, relay, sigma, collision_model)
    for arr in (tau, t_f, t_n, *shares.as_dict().values()):
        arr.setflags(write=False)
    return tau, t_f, t_n, shares


def _objective(scheme: Scheme, config: NetworkConfig, shares: TimeShares) -> np.ndarray:
    value = np.asarray(RATE_FORMULA[scheme](config, shares).min_rate, dtype=float)
    return np.where(np.isnan(value), -np.inf, value)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto the probability simplex."""
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, v.shape[1] + 1)
    rho = np.count_nonzero(u - css / idx > 0, axis=1)
    theta = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


def _project(points: np.ndarray, relay: bool) -> np.ndarray:
    out = points.copy()
    out[:, 0] = np.clip(out[:, 0], 0.0, 1.0)
    if relay:
        simplex = np.column_stack([out[:, 1], out[:, 2], 1.0 - out[:, 1] - out[:, 2]])
        out[:, 1:3] = _project_simplex(simplex)[:, :2]
    else:
        out[:, 1] = np.clip(out[:, 1], 0.0, 1.0)
    return out


def _to_params(x, relay: bool) -> MacParams:
    tau, t_f = float(x[0]), float(x[1])
    if relay:
        return MacParams.from_fractions(t_f, float(x[2]), tau)
    return MacParams(t_f, 1.0 - t_f, 0.0, tau)


def _evaluate_terms(scheme, config, points, relay, collision_model) -> np.ndarray:
    """Flow terms at each point, shape ``(terms, points)``."""
    t_f = points[:, 1]
    t_n = points[:, 2] if relay else 1.0 - t_f
    shares = _batch_shares(scheme.mac_scheme, points[:, 0], t_f, t_n, relay, config.sigma, collision_model)
    return np.array(flow_terms(scheme, config, shares), dtype=float)


def _min_terms(terms: np.ndarray) -> np.ndarray:
    value = terms.min(axis=0)
    return np.where(np.isnan(value), -np.inf, value)


def _kinks(scheme: Scheme, collision_model) -> list[tuple[np.ndarray, float]]:
    """Planes ``a . x = c`` where a collision length switches branch."""
    mac = scheme.mac_scheme
    if mac is MacScheme.DIRECT_ACCESS:
        return [(np.array([0.0, 1.0]), 0.5)]
    if mac is MacScheme.STRAIGHTFORWARD:
        if collision_model is CollisionModel.LITERAL:
            return [(np.array([0.0, 0.0, 1.0]), 0.5)]
        return [(np.array([0.0, 1.0, -1.0]), 0.0)]
    equal = (np.array([0.0, 1.0, -1.0]), 0.0)
    if mac is MacScheme.NAIVE_DF:
        return [equal, (np.array([0.0, 2.0, 1.0]), 1.0)]
    return [equal]


def _sphere(k: int, dim: int) -> np.ndarray:
    """Roughly uniform unit directions (circle or Fibonacci sphere)."""
    if dim == 2:
        a = 2 * np.pi * np.arange(k) / k
        return np.column_stack([np.cos(a), np.sin(a)])
    i = np.arange(k) + 0.5
    phi = np.arccos(1 - 2 * i / k)
    theta = np.pi * (1 + 5**0.5) * i
    return np.column_stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)])


def _reflection(dim: int, it: int) -> np.ndarray:
    # Deterministic Householder reflection that changes every iteration.
    v = (np.arange(1, dim + 1) * 0.6180339887498949 * (it + 1)) % 1.0 - 0.5
    v /= np.linalg.norm(v)
    return np.eye(dim) - 2 * np.outer(v, v)


_CONE_ANGLES = np.array([0.5, 0.2, 0.08, 0.03, 0.01, 0.003, 0.001])


@functools.lru_cache(maxsize=2)
def _cone_frame(dim: int, azimuths: int = 8) -> np.ndarray:
    """Cone directions around the first axis, in a local orthonormal frame."""
    a = _CONE_ANGLES
    if dim == 2:
        a = np.repeat(a, 2) * np.tile([1.0, -1.0], a.size)
        local = np.column_stack([np.cos(a), np.sin(a)])
    else:
        a, b = np.repeat(a, azimuths), np.tile(2 * np.pi * np.arange(azimuths) / azimuths, a.size)
        local = np.column_stack([np.cos(a), np.sin(a) * np.cos(b), np.sin(a) * np.sin(b)])
    return np.vstack([np.eye(dim)[:1], local])


def _cone(u: np.ndarray) -> np.ndarray:
    """Directions hugging ``u``, the last successful step."""
    u = u / np.linalg.norm(u)
    if u.size == 2:
        frame = np.array([u, [-u[1], u[0]]])
    else:
        frame = np.linalg.qr(np.column_stack([u, np.eye(3)]))[0][:, :3].T
        frame[0] = u
    return _cone_frame(u.size) @ frame


@functools.lru_cache(maxsize=16)
def _vertex_rows(n_rows: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n_rows), k)))


def minimax_step(g: np.ndarray, grad: np.ndarray, radius: float, equalities=()) -> np.ndarray | None:
    """Step ``s`` maximizing ``min_j g_j + grad_j . s`` with ``|s|_inf <= radius``
    and ``a . s = c`` for each ``(a, c)`` in ``equalities``.

    The LP has at most four variables, so every vertex is enumerated.
    """
    m, dim = grad.shape
    rows = [np.r_[-grad[j], 1.0] for j in range(m)]
    rhs = list(g)
    for k in range(dim):
        e = np.zeros(dim + 1)
        e[k] = 1.0
        rows += [e, -e]
        rhs += [radius, radius]
    a_ub, b_ub = np.array(rows), np.array(rhs)
    a_eq = np.array([np.r_[a, 0.0] for a, _ in equalities]).reshape(-1, dim + 1)
    b_eq = np.array([c for _, c in equalities], dtype=float)
    combos = _vertex_rows(len(a_ub), dim + 1 - len(a_eq))
    mats = np.concatenate([np.broadcast_to(a_eq, (len(combos),) + a_eq.shape), a_ub[combos]], axis=1)
    vecs = np.concatenate([np.broadcast_to(b_eq, (len(combos), b_eq.size)), b_ub[combos]], axis=1)
    ok = np.abs(np.linalg.det(mats)) > 1e-14
    if not ok.any():
        return None
    y = np.linalg.solve(mats[ok], vecs[ok][..., None])[..., 0]
    y = y[np.all(y @ a_ub.T <= b_ub + 1e-12, axis=1)]
    if y.size == 0:
        return None
    return y[np.argmax(y[:, -1]), :-1]


def _refine(scheme, config, settings, x, relay, collision_model):
    """Poll plus model-step search from ``x``; returns ``(x, fx, evaluations)``."""
    def terms_at(points):
        return _evaluate_terms(scheme, config, points, relay, collision_model)

    tx = terms_at(x[None])[:, 0]
    fx = _min_terms(tx[:, None])[0]
    dim = x.size
    base = _sphere(settings.poll_directions, dim)
    kinks = _kinks(scheme, collision_model)
    h = max(1.0 / (settings.tau_grid_points + 1), settings.simplex_step)
    last = None
    evaluations = 1
    for it in range(settings.refine_iters):
        if h < settings.min_step:
            break
        dirs = base @ _reflection(dim, it).T
        if last is not None:
            dirs = np.vstack([dirs, _cone(last)])
        poll = _project(x + h * dirs, relay)
        poll_terms = terms_at(poll)
        evaluations += len(poll)
        values = _min_terms(poll_terms)
        k = int(np.argmax(values))
        move = (values[k], poll[k], poll_terms[:, k])

        fit = np.all(np.isfinite(poll_terms), axis=0)
        if np.all(np.isfinite(tx)) and fit.sum() > dim:
            grad = np.linalg.lstsq(poll[fit] - x, (poll_terms[:, fit] - tx[:, None]).T, rcond=None)[0].T
            cands = []
            near = [((a, c - a @ x),) for a, c in kinks if abs(a @ x - c) <= 2 * h * np.linalg.norm(a)]
            for eqs in [()] + near:
                step = minimax_step(tx, grad, 2 * h, eqs)
                if step is not None:
                    cands.append(x + step)
            if cands:
                cands = _project(np.array(cands), relay)
                cand_terms = terms_at(cands)
                evaluations += len(cands)
                cand_values = _min_terms(cand_terms)
                j = int(np.argmax(cand_values))
                if cand_values[j] > move[0]:
                    move = (cand_values[j], cands[j], cand_terms[:, j])

        if move[0] > fx:
            last = move[1] - x
            if not np.any(last):
                last = None
            fx, x, tx = move
            h *= 1.0 / settings.refine_shrink
        else:
            h *= settings.refine_shrink
    return x, fx, evaluations


def maximize(scheme: Scheme, config: NetworkConfig, settings: OptSettings | None = None, *,
             collision_model=CollisionModel.LITERAL) -> OptResult:
    """Maximize ``min(c_f, c_n)`` of ``scheme`` over :class:`MacParams`.

    Grid ties go to the lexicographically smallest ``(tau, t_f, t_n)``;
    the refinement is deterministic and only accepts strict improvements.
    """
    scheme = Scheme(scheme)
    settings = settings or OptSettings()
    collision_model = CollisionModel(collision_model)
    relay = scheme is not Scheme.DIRECT_LINK

    tau, t_f, t_n, shares = _grid(scheme.mac_scheme, relay, config.sigma, settings, collision_model)
    if tau.size == 0:
        raise ValueError("empty optimization grid")
    values = _objective(scheme, config, shares)
    best = int(np.argmax(values))
    x = np.array([tau[best], t_f[best], t_n[best]] if relay else [tau[best], t_f[best]])
    grid_best = float(values[best])
    x, _, evaluations = _refine(scheme, config, settings, x, relay, collision_model)
    evaluations += tau.size

    params = _to_params(x, relay)
    result = evaluate(scheme, config, params, collision_model=collision_model)
    return OptResult(scheme, params, result.min_rate, result.shares, evaluations,
                     (result.c_f, result.c_n), grid_best)


def optimize_all(config: NetworkConfig, settings: OptSettings | None = None, schemes=tuple(Scheme), *,
                 collision_model=CollisionModel.LITERAL) -> dict[Scheme, OptResult]:
    return {Scheme(s): maximize(s, config, settings, collision_model=collision_model) for s in schemes}


def improvement_from_rates(rates: dict[Scheme, float]) -> dict[Scheme, float]:
    """Percent gain of every scheme over the better of Direct-Link and Two-Hop."""
    nocoop = max(rates[Scheme.DIRECT_LINK], rates[Scheme.TWO_HOP])
    if not nocoop > 0:
        raise UndefinedImprovementError("non-cooperative benchmark rate is zero")
    return {s: 100.0 * (r - nocoop) / nocoop for s, r in rates.items()}


def improvement(config: NetworkConfig, settings: OptSettings | None = None, *,
                collision_model=CollisionModel.LITERAL) -> dict[Scheme, float]:
    results = optimize_all(config, settings, collision_model=collision_model)
    return improvement_from_rates({s: r.best_rate for s, r in results.items()})
