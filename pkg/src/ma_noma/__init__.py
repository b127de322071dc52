"""Movable-antenna NOMA short-packet downlink: placement, allocation, simulation."""

from .alloc import (AllocProblem, AllocSolution, InfeasibleError, SearchConfig,
                    fixed_point_R2, optimal_R1, p2_lower_bound, solve_noma, solve_oma,
                    stationarity_U)
from .channel import (AntennaPosition, ReceiveGeometry, UserChannel, frv, gain,
                      sample_channel_pair)
from .fbl import (NomaAllocation, dispersion_f, error_prob, q_function, sinr_set,
                  throughput_pair)
from .placement import ScaConfig, optimize_position

__version__ = "0.1.0"

__all__ = [
    "AllocProblem", "AllocSolution", "InfeasibleError", "SearchConfig", "fixed_point_R2",
    "optimal_R1", "p2_lower_bound", "solve_noma", "solve_oma", "stationarity_U",
    "AntennaPosition", "ReceiveGeometry", "UserChannel", "frv", "gain", "sample_channel_pair",
    "NomaAllocation", "dispersion_f", "error_prob", "q_function", "sinr_set", "throughput_pair",
    "ScaConfig", "optimize_position",
]
