"""Conformal invariant lambda of planar domains: exact series pipeline and PDE pipeline."""

__version__ = "0.1.0"

from .models import constants, v_annulus, v_disk, u_cusp, u_punctured_disk, u_shell
from .series import LaurentSeries, mobius_series, poly_series
from .mapcalc import LambdaReport, build_map, lambda_via_map, classify_rigidity, profile
from .domain import (
    Annulus,
    BoundaryCurve,
    CurveBounded,
    MappedAnnulus,
    Punctured,
    UnitDisk,
    frames,
    signed_distance,
    spec_from_json,
    spec_to_json,
    validate,
)
from .liouville import LiouvilleSolution, modulus, solve_liouville
from .expansion import extract_c3_fit, extract_c3_flux, lambda_numeric

__all__ = [
    "constants", "v_annulus", "v_disk", "u_cusp", "u_punctured_disk", "u_shell",
    "LaurentSeries", "mobius_series", "poly_series",
    "LambdaReport", "build_map", "lambda_via_map", "classify_rigidity", "profile",
    "Annulus", "BoundaryCurve", "CurveBounded", "MappedAnnulus", "Punctured", "UnitDisk",
    "frames", "signed_distance", "spec_from_json", "spec_to_json", "validate",
    "LiouvilleSolution", "modulus", "solve_liouville",
    "extract_c3_fit", "extract_c3_flux", "lambda_numeric",
]
