from .analysis import Decay, Plateau, classify_decay, decay_slopes, detect_plateaus
from .groups import detect_groups
from .problem import (
    RadialProblem,
    ResidualReport,
    Trajectory,
    integrate,
    liouville_exact,
    radial_residuals,
    read_trajectory_csv,
    residual_report,
    start_state,
)
from .rk import dopri54

__all__ = [
    "Decay",
    "Plateau",
    "RadialProblem",
    "ResidualReport",
    "Trajectory",
    "classify_decay",
    "decay_slopes",
    "detect_groups",
    "detect_plateaus",
    "dopri54",
    "integrate",
    "liouville_exact",
    "radial_residuals",
    "read_trajectory_csv",
    "residual_report",
    "start_state",
]
