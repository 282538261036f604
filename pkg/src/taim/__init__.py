"""Time-constrained adaptive influence maximization under the independent cascade model."""

from .diffusion import (
    LiveEdgeRealization,
    Status,
    StatusError,
    advance_round,
    estimate_g_forward,
    frontier,
    is_final,
    simulate,
)
from .graph import (
    EdgeListParseError,
    Graph,
    GraphError,
    ProbModel,
    ProbModelError,
    generate_line_graph,
    generate_power_law,
    load_edge_list,
)
from .policies import (
    FFPolicy,
    ForesightConfig,
    GreedyPolicy,
    NonAdaptivePolicy,
    PolicyDecision,
    PolicyState,
    SeedingPattern,
    SOFPolicy,
    StaticPolicy,
    make_k_filter_pattern,
    make_policy,
)
from .process import ContractViolation, ProcessConfig, TrialResult, run_seeding_process, run_trials
from .rrset import ALWAYS_COVERED, RRCollection, SelectorConfig, estimate_g_rr, select_seeds_gr

__version__ = "0.1.0"
