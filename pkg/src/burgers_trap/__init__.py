"""Computer-assisted bounds and periodic-orbit enclosures for the forced
viscous Burgers equation on (0, 1) with Dirichlet boundary conditions."""

from .errors import (CertificationError, ConfigError, DomainError, EnclosureFailure,
                     InversionFailure, NoBound, RootFailure, StepFailure)
from .forcing import Forcing, ForcingTerm, NormMode, example1, example2
from .interval import PI, Interval, IntervalMatrix, IntervalVector
from .radii import ParamGrid, TrappingRadii, trapping_radii

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "ConfigError", "DomainError", "EnclosureFailure",
    "InversionFailure", "NoBound", "RootFailure", "StepFailure",
    "Forcing", "ForcingTerm", "NormMode", "example1", "example2",
    "PI", "Interval", "IntervalMatrix", "IntervalVector",
    "ParamGrid", "TrappingRadii", "trapping_radii",
]
