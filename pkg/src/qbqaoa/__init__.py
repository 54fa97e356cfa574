"""Quasi-binary encoded hard-constraint QAOA for integer portfolio optimization."""

from .analysis import mixability_matrix, qubit_sweep, run_experiment, t_interval
from .circuit import QaoaCircuit, apply_mixing_layer, apply_xy, apply_xyy, mixing_schedule
from .encoding import QubitLayout, build_layout, decode, decode_index, encode_canonical, feasible_indices
from .estimators import EstimatorConfig, approximation_ratio, estimate_cvar, estimate_normal
from .exceptions import (
    CapExceeded,
    ConfigError,
    InfeasibleProblem,
    MalformedData,
    MissingValue,
    NormDrift,
    QBQAOAError,
    SingularCovariance,
)
from .iterate import IterationConfig, qaoa_solver, refine
from .market import (
    MarketMoments,
    MarkowitzMoments,
    PriceHistory,
    compute_moments,
    frontier_constants,
    frontier_variance,
    load_price_history,
    risk_factor_from_target,
    target_from_risk_factor,
)
from .problem import IntegerModel, brute_force_stats, cost, discretize, greedy_allocation, shift
from .qaoa import QaoaParams, QuasiBinaryQAOA, RunReport

__version__ = "0.1.0"
