"""Blowup energy sets and radial simulations for singular SU(n+1) Toda systems."""

from .closure import SigmaSet, enumerate_sigma, float_oracle_enumerate, is_member, upper_right
from .conic import Axis, Conic, SigmaPoint, bounding_box, intersect_line, residual, seed_points
from .errors import (
    AmbiguousSign,
    ClosureBudgetExceeded,
    DivisionByZero,
    IntegrationOverflow,
    NegativeRadicand,
    NonConvergence,
    TodaSigmaError,
)
from .numeric import Cmp, DyadicInterval, RealScalar, real, real_cmp, real_sqrt, refine
from .quantization import (
    CartanMatrix,
    cartan,
    fully_bubbling_energy,
    gap_form,
    margin_check,
    pohozaev_residual,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSign", "Axis", "CartanMatrix", "ClosureBudgetExceeded", "Cmp", "Conic",
    "DivisionByZero", "DyadicInterval", "IntegrationOverflow", "NegativeRadicand",
    "NonConvergence", "RealScalar", "SigmaPoint", "SigmaSet", "TodaSigmaError",
    "bounding_box", "cartan", "enumerate_sigma", "float_oracle_enumerate",
    "fully_bubbling_energy", "gap_form", "intersect_line", "is_member", "margin_check",
    "pohozaev_residual", "real", "real_cmp", "real_sqrt", "refine", "residual",
    "seed_points", "upper_right",
]
