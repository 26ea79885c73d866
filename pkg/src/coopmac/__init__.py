"""Max-min throughput of cooperative relaying over a random-access MAC."""

from .channel import Link, NetworkConfig, awgn_rate, link_snr
from .mac import (
    ChainSpec,
    CollisionModel,
    DegenerateInputError,
    MacParams,
    MacScheme,
    PhaseKind,
    TimeShares,
    build_chain,
    integrate_chain,
    phase_probs,
    shares_direct,
    shares_idle_forward,
    shares_naive_df,
    shares_straightforward,
    time_shares,
)
from .optimize import OptResult, OptSettings, UndefinedImprovementError, improvement, maximize, optimize_all
from .simulator import ComparisonReport, SimConfig, SimStats, compare, simulate, validate
from .rates import (
    RateResult,
    Scheme,
    evaluate,
    flow_terms,
    no_coop_benchmark,
    rate_decode_forward,
    rate_direct,
    rate_two_hop,
)

__version__ = "0.1.0"
