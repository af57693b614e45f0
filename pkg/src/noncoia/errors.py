"""Exception types shared across the package."""


class NoncoiaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NoncoiaError):
    """Invalid or inconsistent configuration values."""


class DegeneratePhase(NoncoiaError):
    """A phase plan produced a cosine factor below the degeneracy floor."""


class AlignmentError(NoncoiaError):
    """Base class for alignment solver failures (caller may resample phases)."""


class NoRealAlignment(AlignmentError):
    """The eigenvector equation has no real solution for this network."""


class DegenerateAlignment(AlignmentError):
    """Desired and interference directions (nearly) coincide at some receiver."""


class InfeasibleRate(NoncoiaError):
    """The requested total rate cannot be carried by the available channels."""
