"""Exception types shared across the package."""


class CertificationError(Exception):
    """Base class for failures that prevent a certified result."""


class DomainError(CertificationError, ValueError):
    """An interval operation was applied outside its domain."""


class InversionFailure(CertificationError):
    """A matrix could not be verifiably inverted at binary64 precision."""


class RootFailure(CertificationError):
    """The bracketing certificate of a dominant root could not be verified."""


class NoBound(CertificationError):
    """A Wang-trick parameter set admits no finite bound."""


class EnclosureFailure(CertificationError):
    """No rough enclosure was validated within the inflation budget."""


class StepFailure(CertificationError):
    """A rigorous integration step blew up or its series did not converge."""


class ConfigError(ValueError):
    """The run configuration is malformed."""
