"""Numerical checks of max|f| <= (1/2 pi) * integral of ||Hess f|| over a disc."""

from .errors import HessdiscError
from .fields import (
    UNIT_DISC,
    Disc,
    GridField,
    ScalarField,
    eval_field,
    field_from_spec,
    gradient,
    hessian,
    operator_norm,
    sample_grid,
)
from .profiles import (
    GProfile,
    RadialSolution,
    build_radial_solution,
    normalize_profile,
    recover_g,
    validate_g,
)

__version__ = "0.1.0"

__all__ = [
    "HessdiscError",
    "UNIT_DISC",
    "Disc",
    "GridField",
    "ScalarField",
    "eval_field",
    "field_from_spec",
    "gradient",
    "hessian",
    "operator_norm",
    "sample_grid",
    "GProfile",
    "RadialSolution",
    "build_radial_solution",
    "normalize_profile",
    "recover_g",
    "validate_g",
]
