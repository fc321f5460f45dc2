"""Critical fronts of a two-species FKPP system: waves, spectra, simulation and Monte Carlo checks."""

from .model import (
    BifurcationError,
    DomainError,
    FixedPointSpectrum,
    ModelParams,
    WaveState,
    fixed_point_spectrum,
    jacobian_sd,
    unstable_branch_direction,
    vector_field_s0,
    vector_field_sd,
)
from .wave import WaveProfile, find_invading_front, load_profile, save_profile, shoot, verify_tw_properties

__all__ = [
    "BifurcationError",
    "DomainError",
    "FixedPointSpectrum",
    "ModelParams",
    "WaveProfile",
    "WaveState",
    "find_invading_front",
    "fixed_point_spectrum",
    "jacobian_sd",
    "load_profile",
    "save_profile",
    "shoot",
    "unstable_branch_direction",
    "vector_field_s0",
    "vector_field_sd",
    "verify_tw_properties",
]

__version__ = "0.1.0"
