"""Per-flow achievable rates of the five transmission schemes."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import Link, NetworkConfig, awgn_rate, link_snr
from .mac import CollisionModel, MacParams, MacScheme, TimeShares, time_shares


class Scheme(enum.Enum):
    DIRECT_LINK = "direct-link"
    TWO_HOP = "two-hop"
    NAIVE_DF = "naive-df"
    DECODE_IDLE_FORWARD = "decode-idle-forward"
    DECODE_STRAIGHTFORWARD = "decode-straightforward"

    @property
    def mac_scheme(self) -> MacScheme:
        return _MAC_OF[self]

    @property
    def cooperative(self) -> bool:
        return self in COOPERATIVE


# Two-Hop runs on the Decode-Straightforward MAC, the one with fewest collisions.
_MAC_OF = {
    Scheme.DIRECT_LINK: MacScheme.DIRECT_ACCESS,
    Scheme.TWO_HOP: MacScheme.STRAIGHTFORWARD,
    Scheme.NAIVE_DF: MacScheme.NAIVE_DF,
    Scheme.DECODE_IDLE_FORWARD: MacScheme.IDLE_FORWARD,
    Scheme.DECODE_STRAIGHTFORWARD: MacScheme.STRAIGHTFORWARD,
}

COOPERATIVE = (Scheme.NAIVE_DF, Scheme.DECODE_IDLE_FORWARD, Scheme.DECODE_STRAIGHTFORWARD)


@dataclass(frozen=True)
class RateResult:
    c_f: float
    c_n: float
    min_rate: float
    shares: TimeShares


def _result(c_f, c_n, shares: TimeShares) -> RateResult:
    return RateResult(c_f, c_n, np.minimum(c_f, c_n) if np.ndim(c_f) else min(c_f, c_n), shares)


def _rate_n(config: NetworkConfig, shares: TimeShares):
    return awgn_rate(shares.s_n, shares.t_N, link_snr(config, Link.NA))


def rate_direct(config: NetworkConfig, shares: TimeShares) -> RateResult:
    """Both nodes talk straight to the access point."""
    if np.any(np.asarray(shares.s_r) != 0):
        raise ValueError("direct link has no relaying: s_r must be 0")
    c_f = awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FA))
    return _result(c_f, _rate_n(config, shares), shares)


def rate_two_hop(config: NetworkConfig, shares: TimeShares) -> RateResult:
    """F's flow is bottlenecked by the weaker of the F->N and N->A hops;
    A discards what it overhears from F."""
    hop1 = awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FN))
    hop2 = awgn_rate(shares.s_r, shares.t_N, link_snr(config, Link.NA))
    return _result(np.minimum(hop1, hop2), _rate_n(config, shares), shares)


def rate_decode_forward(config: NetworkConfig, shares: TimeShares) -> RateResult:
    """N must decode F's packet; A combines the direct reception with N's
    forwarded residual as two parallel AWGN channels."""
    decode = awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FN))
    combine = awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FA)) + awgn_rate(
        shares.s_r, shares.t_N, link_snr(config, Link.NA)
    )
    return _result(np.minimum(decode, combine), _rate_n(config, shares), shares)


def flow_terms(scheme: Scheme, config: NetworkConfig, shares: TimeShares) -> tuple:
    """The smooth pieces whose minimum is ``min(c_f, c_n)``: F's bottleneck
    terms followed by ``c_n``."""
    scheme = Scheme(scheme)
    c_n = _rate_n(config, shares)
    if scheme is Scheme.DIRECT_LINK:
        return awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FA)), c_n
    first = awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FN))
    relay = awgn_rate(shares.s_r, shares.t_N, link_snr(config, Link.NA))
    if scheme is Scheme.TWO_HOP:
        return first, relay, c_n
    return first, awgn_rate(shares.s_f, shares.t_F, link_snr(config, Link.FA)) + relay, c_n


RATE_FORMULA = {
    Scheme.DIRECT_LINK: rate_direct,
    Scheme.TWO_HOP: rate_two_hop,
    Scheme.NAIVE_DF: rate_decode_forward,
    Scheme.DECODE_IDLE_FORWARD: rate_decode_forward,
    Scheme.DECODE_STRAIGHTFORWARD: rate_decode_forward,
}


def evaluate(scheme: Scheme, config: NetworkConfig, params: MacParams, *, collision_model=CollisionModel.LITERAL) -> RateResult:
    scheme = Scheme(scheme)
    shares = time_shares(scheme.mac_scheme, params, config.sigma, collision_model=collision_model)
    result = RATE_FORMULA[scheme](config, shares)
    if np.ndim(result.c_f) == 0:
        result = RateResult(float(result.c_f), float(result.c_n), float(result.min_rate), shares)
    return result


def no_coop_benchmark(config: NetworkConfig, settings=None, *, collision_model=CollisionModel.LITERAL) -> float:
    """Best of optimized Direct-Link and Two-Hop: what routing alone achieves."""
    from .optimize import OptSettings, maximize

    settings = settings or OptSettings()
    return max(
        maximize(Scheme.DIRECT_LINK, config, settings, collision_model=collision_model).best_rate,
        maximize(Scheme.TWO_HOP, config, settings, collision_model=collision_model).best_rate,
    )
