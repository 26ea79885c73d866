"""Phase-level renewal model of the random-access MAC.

Each MAC scheme is described by a small Markov chain over channel *states*
(one or two).  In every state a set of contending nodes independently
transmits with probability ``tau``; the resulting transmit pattern selects a
*phase* (success, collision, idle, ...) with a known duration and a known next
state.  Integrating the phase durations against the stationary distribution
gives the normalized time-division shares.

:func:`build_chain` is the single description of every scheme; both the
analytic shares and the Monte Carlo simulator consume it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

SIMPLEX_TOL = 1e-12


class DegenerateInputError(ValueError):
    """The expected phase duration is zero, so shares are undefined."""


class MacScheme(enum.Enum):
    DIRECT_ACCESS = "direct-access"
    NAIVE_DF = "naive-df"
    IDLE_FORWARD = "idle-forward"
    STRAIGHTFORWARD = "straightforward"


class CollisionModel(enum.Enum):
    # Straightforward collisions last max(t_f + t_r, t_n) (F's effective packet)
    LITERAL = "literal"
    # ... or max(t_f, t_n): no relay packet follows a collided F packet
    REFINED = "refined"


class PhaseKind(enum.Enum):
    SUCCESS_F = "success-f"
    SUCCESS_N = "success-n"
    SUCCESS_R = "success-r"
    COLLISION = "collision"
    IDLE = "idle"
    WASTED_F = "wasted-f"


@dataclass(frozen=True)
class MacParams:
    """Normalized packetsizes (summing to one) and transmission probability."""

    t_f: float
    t_n: float
    t_r: float
    tau: float

    def __post_init__(self):
        for name in ("t_f", "t_n", "t_r"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        total = self.t_f + self.t_n + self.t_r
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"packetsizes must sum to 1, got {total!r}")
        if not 0 <= self.tau <= 1:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")

    @classmethod
    def from_fractions(cls, t_f: float, t_n: float, tau: float) -> MacParams:
        """Build params with the relay packetsize taking up the remainder."""
        return cls(t_f, t_n, max(0.0, 1.0 - t_f - t_n), tau)


@dataclass(frozen=True)
class TimeShares:
    """Fractions of time: successful F/N/relay transmission (``s_*``), total
    transmit time of F and N (``t_F``, ``t_N``), idle and collision time.

    ``t_N`` counts everything N sends, its own packets and relayed ones.
    Fields hold floats, or equally shaped arrays for batch evaluation.
    """

    s_f: float
    s_n: float
    s_r: float
    t_F: float
    t_N: float
    t_i: float
    t_c: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


SHARE_NAMES = tuple(f.name for f in fields(TimeShares))


@dataclass(frozen=True)
class Phase:
    """One transition phase of a state.

    ``pattern`` is the transmit decision ``(F sends, N sends)`` that triggers
    the phase.  The accrual fields split the phase duration into the
    categories of :class:`TimeShares`; ``f_tx``/``n_tx`` are airtime of F and
    N, which overlap the other categories.
    """

    kind: PhaseKind
    pattern: tuple[bool, bool]
    prob: float
    next_state: int
    success_f: float = 0.0
    success_n: float = 0.0
    success_r: float = 0.0
    collision: float = 0.0
    idle: float = 0.0
    f_tx: float = 0.0
    n_tx: float = 0.0

    @property
    def duration(self):
        return self.success_f + self.success_n + self.success_r + self.collision + self.idle


@dataclass(frozen=True)
class ChainState:
    name: str
    contenders: tuple[bool, bool]  # (F contends, N contends)
    phases: tuple[Phase, ...]

    def phase_for(self, pattern: tuple[bool, bool]) -> Phase:
        masked = (pattern[0] and self.contenders[0], pattern[1] and self.contenders[1])
        for phase in self.phases:
            if phase.pattern == masked:
                return phase
        raise KeyError(f"no phase for transmit pattern {masked} in state {self.name!r}")

    def leave_prob(self, index: int):
        return sum(p.prob for p in self.phases if p.next_state != index)


@dataclass(frozen=True)
class ChainSpec:
    scheme: MacScheme
    states: tuple[ChainState, ...]
    stationary: tuple

    @property
    def transitions(self):
        """Inter-state transition probabilities ``(p12, p21)``; empty for one state."""
        if len(self.states) == 1:
            return ()
        return (self.states[0].leave_prob(0), self.states[1].leave_prob(1))


def phase_probs(tau):
    """Probabilities that one designated node succeeds, both collide, none sends."""
    if np.any(np.asarray(tau) < 0) or np.any(np.asarray(tau) > 1):
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    return tau * (1 - tau), tau * tau, (1 - tau) * (1 - tau)


def _contention_phases(t_f, t_n, sigma, tau, *, f_next, col_len):
    """The four phases of F and N contending with own packets."""
    p_s, p_c, p_i = phase_probs(tau)
    return (
        Phase(PhaseKind.SUCCESS_F, (True, False), p_s, f_next, success_f=t_f, f_tx=t_f),
        Phase(PhaseKind.SUCCESS_N, (False, True), p_s, 0, success_n=t_n, n_tx=t_n),
        Phase(PhaseKind.COLLISION, (True, True), p_c, 0, collision=col_len, f_tx=t_f, n_tx=t_n),
        Phase(PhaseKind.IDLE, (False, False), p_i, 0, idle=sigma),
    )


def _stationary(p12, p21):
    # A chain that never changes state (tau = 0, or tau = 1 for naive DF)
    # is given the symmetric limit; every share is then the same in both states.
    denom = p12 + p21
    if np.ndim(denom) == 0:
        pi1 = 0.5 if denom == 0 else p21 / denom
    else:
        safe = np.where(denom > 0, denom, 1.0)
        pi1 = np.where(denom > 0, p21 / safe, 0.5)
    return pi1, 1 - pi1


def build_chain(scheme: MacScheme, params, sigma, *, collision_model=CollisionModel.LITERAL) -> ChainSpec:
    """Per-state phase table of ``scheme``.

    ``params`` is usually a :class:`MacParams`; any object with ``t_f``,
    ``t_n``, ``t_r`` and ``tau`` attributes holding broadcastable arrays is
    accepted too (batch evaluation, no validation).
    """
    scheme = MacScheme(scheme)
    collision_model = CollisionModel(collision_model)
    t_f, t_n, t_r, tau = params.t_f, params.t_n, params.t_r, params.tau
    if isinstance(params, MacParams):
        if scheme is MacScheme.DIRECT_ACCESS and t_r != 0:
            raise ValueError("direct access never relays: t_r must be 0")
        if not sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {sigma!r}")
    p_s, p_c, p_i = phase_probs(tau)
    both = (True, True)

    if scheme is MacScheme.DIRECT_ACCESS:
        state = ChainState("F,N compete", both, _contention_phases(t_f, t_n, sigma, tau, f_next=0, col_len=np.maximum(t_f, t_n)))
        return ChainSpec(scheme, (state,), (1.0,))

    if scheme is MacScheme.STRAIGHTFORWARD:
        # N forwards immediately after every F success, so F's packet is
        # effectively t_f + t_r long.
        eff = t_f + t_r
        col_len = np.maximum(eff if collision_model is CollisionModel.LITERAL else t_f, t_n)
        phases = (
            Phase(PhaseKind.SUCCESS_F, (True, False), p_s, 0, success_f=t_f, success_r=t_r, f_tx=t_f, n_tx=t_r),
            Phase(PhaseKind.SUCCESS_N, (False, True), p_s, 0, success_n=t_n, n_tx=t_n),
            Phase(PhaseKind.COLLISION, both, p_c, 0, collision=col_len, f_tx=t_f, n_tx=t_n),
            Phase(PhaseKind.IDLE, (False, False), p_i, 0, idle=sigma),
        )
        return ChainSpec(scheme, (ChainState("F,N compete", both, phases),), (1.0,))

    first = ChainState("F,N compete", both, _contention_phases(t_f, t_n, sigma, tau, f_next=1, col_len=np.maximum(t_f, t_n)))

    if scheme is MacScheme.NAIVE_DF:
        # N contends with the held relay packet; an F success is ignored by N
        # (queue collision) and is pure waste.
        relaying = ChainState("F,N compete, N relaying", both, (
            Phase(PhaseKind.WASTED_F, (True, False), p_s, 1, collision=t_f, f_tx=t_f),
            Phase(PhaseKind.SUCCESS_R, (False, True), p_s, 0, success_r=t_r, n_tx=t_r),
            Phase(PhaseKind.COLLISION, both, p_c, 1, collision=np.maximum(t_f, t_r), f_tx=t_f, n_tx=t_r),
            Phase(PhaseKind.IDLE, (False, False), p_i, 1, idle=sigma),
        ))
    elif scheme is MacScheme.IDLE_FORWARD:
        # F stays silent until the relay packet is acknowledged.
        relaying = ChainState("N relaying, F idle", (False, True), (
            Phase(PhaseKind.SUCCESS_R, (False, True), tau, 0, success_r=t_r, n_tx=t_r),
            Phase(PhaseKind.IDLE, (False, False), 1 - tau, 1, idle=sigma),
        ))
    else:
        raise ValueError(f"unknown MAC scheme {scheme!r}")

    states = (first, relaying)
    pi = _stationary(states[0].leave_prob(0), states[1].leave_prob(1))
    return ChainSpec(scheme, states, pi)


def integrate_chain(chain: ChainSpec, *, strict: bool = True) -> TimeShares:
    """Stationary-weighted expected accruals normalized by the mean phase length.

    With ``strict`` a zero mean phase length raises
    :class:`DegenerateInputError`; otherwise the shares come out as NaN.
    """
    acc = dict.fromkeys(("success_f", "success_n", "success_r", "collision", "idle", "f_tx", "n_tx"), 0.0)
    for weight, state in zip(chain.stationary, chain.states):
        for key in acc:
            acc[key] = acc[key] + weight * sum(p.prob * getattr(p, key) for p in state.phases)
    mean_len = acc["success_f"] + acc["success_n"] + acc["success_r"] + acc["collision"] + acc["idle"]
    if strict and np.any(np.asarray(mean_len) <= 0):
        raise DegenerateInputError("mean phase duration is zero (tau = 0 with sigma = 0?)")
    with np.errstate(divide="ignore", invalid="ignore"):
        return TimeShares(
            s_f=acc["success_f"] / mean_len,
            s_n=acc["success_n"] / mean_len,
            s_r=acc["success_r"] / mean_len,
            t_F=acc["f_tx"] / mean_len,
            t_N=acc["n_tx"] / mean_len,
            t_i=acc["idle"] / mean_len,
            t_c=acc["collision"] / mean_len,
        )


def shares_direct(params: MacParams, sigma: float) -> TimeShares:
    return integrate_chain(build_chain(MacScheme.DIRECT_ACCESS, params, sigma))


def shares_naive_df(params: MacParams, sigma: float) -> TimeShares:
    return integrate_chain(build_chain(MacScheme.NAIVE_DF, params, sigma))


def shares_idle_forward(params: MacParams, sigma: float) -> TimeShares:
    return integrate_chain(build_chain(MacScheme.IDLE_FORWARD, params, sigma))


def shares_straightforward(params: MacParams, sigma: float, *, collision_model=CollisionModel.LITERAL) -> TimeShares:
    return integrate_chain(build_chain(MacScheme.STRAIGHTFORWARD, params, sigma, collision_model=collision_model))


def time_shares(scheme: MacScheme, params: MacParams, sigma: float, *, collision_model=CollisionModel.LITERAL) -> TimeShares:
    return integrate_chain(build_chain(scheme, params, sigma, collision_model=collision_model))


def check_shares(shares: TimeShares, tol: float = SIMPLEX_TOL) -> None:
    """Raise ``AssertionError`` unless ``shares`` satisfies the time identities."""
    total = shares.t_i + shares.t_c + shares.s_f + shares.s_n + shares.s_r
    assert math.isclose(total, 1.0, rel_tol=0, abs_tol=tol), f"shares sum to {total!r}"
    for name in SHARE_NAMES:
        value = getattr(shares, name)
        assert -tol <= value <= 1 + tol, f"{name}={value!r} outside [0, 1]"
    assert shares.s_f <= shares.t_F + tol
    assert shares.s_n <= shares.t_N + tol
    assert shares.s_r <= shares.t_N + tol
