"""Exception hierarchy shared by all nlslab modules."""


class NlsLabError(Exception):
    """Base class for all package errors."""


class StructuralError(NlsLabError):
    """Shape/grid mismatch between operands."""


class DomainError(NlsLabError, ValueError):
    """Parameter outside the mathematically valid range."""


class ResolutionError(NlsLabError):
    """Requested feature cannot be represented on the given grid."""


class LifespanError(NlsLabError):
    """A solve hit (or failed to hit) the detected blow-up time."""


class DegenerateCouplingError(NlsLabError):
    """Amplitude-phase coupling too weak to select an observation time."""


class ConfigError(NlsLabError):
    """Malformed or inconsistent experiment configuration."""
