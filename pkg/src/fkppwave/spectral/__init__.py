"""Spectral analysis of the weighted linearization about a critical front."""

from .assumption import AssumptionReport, check_assumption_region
from .essential import (
    BranchCurve,
    OverstabilizationError,
    SpectrumCurves,
    energy_bound,
    energy_bound_general,
    essential_spectrum_curves,
)
from .evans import (
    Contour,
    EvansIntegrationError,
    EvansResult,
    EvansSystem,
    RefinementNeededError,
    SpectralRegionError,
    consistent_splitting_dims,
    evans_contour,
    evans_function,
    evans_values,
    evans_winding,
    planted_eigenvalue_system,
    wave_evans_system,
    wedge_contour,
    winding_number,
)
from .weight import LinearizationMatrix, WeightSpec, limit_matrix, limit_spatial_eigenvalues, weight_eval

__all__ = [
    "AssumptionReport",
    "BranchCurve",
    "Contour",
    "EvansIntegrationError",
    "EvansResult",
    "EvansSystem",
    "LinearizationMatrix",
    "OverstabilizationError",
    "RefinementNeededError",
    "SpectralRegionError",
    "SpectrumCurves",
    "WeightSpec",
    "check_assumption_region",
    "consistent_splitting_dims",
    "energy_bound",
    "energy_bound_general",
    "essential_spectrum_curves",
    "evans_contour",
    "evans_function",
    "evans_values",
    "evans_winding",
    "limit_matrix",
    "limit_spatial_eigenvalues",
    "planted_eigenvalue_system",
    "wave_evans_system",
    "wedge_contour",
    "weight_eval",
    "winding_number",
]
