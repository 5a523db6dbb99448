"""Generalized Pauli constraints, pinning analysis and model systems."""

from .errors import (
    ArgumentError,
    GpcError,
    NumericError,
    PreconditionError,
    UnsupportedSettingError,
    UnsupportedTruncationError,
)
from .fock_core import (
    FermionState,
    Setting,
    Spectrum,
    apply_ladder,
    ky_fan_sum,
    natural_occupations,
    one_rdm,
)

from .hubbard import LatticeSetting, find_transition, ground_scan, solve_three_site, superposed_state
from .pinning_analysis import PinningReport, analyze, truncate
from .qmp_compat import check_spectra, marginal_triple

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "FermionState",
    "GpcError",
    "LatticeSetting",
    "NumericError",
    "PinningReport",
    "PreconditionError",
    "Setting",
    "Spectrum",
    "UnsupportedSettingError",
    "UnsupportedTruncationError",
    "analyze",
    "apply_ladder",
    "check_spectra",
    "find_transition",
    "ground_scan",
    "ky_fan_sum",
    "marginal_triple",
    "natural_occupations",
    "one_rdm",
    "solve_three_site",
    "superposed_state",
    "truncate",
]
