"""fluidcap: uplink sum-capacity maximization for repositionable-antenna users.

A library plus CLI that evaluates and maximizes the sum capacity of a
multiple-access channel in which each terminal can slide its antennas along a
linear aperture. Provides the channel model, water-filling and its iterative
multiuser form, closed-form and grid position optimizers, the penalized
rank-one relaxation machinery, benchmark searches, capacity bounds, and a
reproducible Monte Carlo sweep harness.
"""

__version__ = "0.1.0"

from .capacity import (
    SolveReport,
    TxCovariance,
    c0_large_m,
    effective_channel,
    interference_matrix,
    quadratic_capacity_1ant,
    sum_capacity,
)
from .channel import (
    PathSet,
    PositionVector,
    Scenario,
    ScenarioDims,
    UserConfig,
    channel_matrix,
    random_scenario,
    read_scenario,
    steering_rx,
    steering_tx,
    write_scenario,
)
from .closedform import (
    TwoPathParams,
    grid_best_w,
    psi_matrix,
    single_user_position_update,
    two_path_w_star,
)
from .errors import (
    BudgetError,
    ConfigError,
    ContractViolation,
    DegeneratePathError,
    DomainError,
    FluidcapError,
    InfeasibleMappingError,
    NonconvergenceError,
)
from .harness import SweepSpec, emit, run_sweep
from .numkit import dominant_eig, elliptope_project, logdet_hpd
from .rankone import RankOneBlock, j_outer, map_positions, mm_elliptope_solve, rank_residual
from .solvers import (
    ALGORITHMS,
    alg1_alternating,
    alg2_joint,
    alg3_single_user,
    alg4_multiuser,
    benchmark_es,
    benchmark_fixed,
    benchmark_iwf_es,
    benchmark_simplified_iwf_es,
    run_algorithm,
)
from .waterfill import capacity_approx, capacity_upper_bound, iterative_waterfill, waterfill_p2p

__all__ = [
    "__version__",
    "ALGORITHMS",
    "BudgetError",
    "ConfigError",
    "ContractViolation",
    "DegeneratePathError",
    "DomainError",
    "FluidcapError",
    "InfeasibleMappingError",
    "NonconvergenceError",
    "PathSet",
    "PositionVector",
    "RankOneBlock",
    "Scenario",
    "ScenarioDims",
    "SolveReport",
    "SweepSpec",
    "TwoPathParams",
    "TxCovariance",
    "UserConfig",
    "alg1_alternating",
    "alg2_joint",
    "alg3_single_user",
    "alg4_multiuser",
    "benchmark_es",
    "benchmark_fixed",
    "benchmark_iwf_es",
    "benchmark_simplified_iwf_es",
    "c0_large_m",
    "capacity_approx",
    "capacity_upper_bound",
    "channel_matrix",
    "dominant_eig",
    "effective_channel",
    "elliptope_project",
    "emit",
    "grid_best_w",
    "interference_matrix",
    "iterative_waterfill",
    "j_outer",
    "logdet_hpd",
    "map_positions",
    "mm_elliptope_solve",
    "psi_matrix",
    "quadratic_capacity_1ant",
    "random_scenario",
    "rank_residual",
    "read_scenario",
    "run_algorithm",
    "run_sweep",
    "single_user_position_update",
    "steering_rx",
    "steering_tx",
    "sum_capacity",
    "two_path_w_star",
    "waterfill_p2p",
    "write_scenario",
]
