"""Exception types raised across the package."""


class NCHodgeError(Exception):
    """Base class for all package errors."""


class StructureError(NCHodgeError, ValueError):
    """Array shapes or dimensions do not fit together."""


class ParameterError(NCHodgeError, ValueError):
    """A model or operation parameter is out of its admissible range."""


class ConsistencyError(NCHodgeError):
    """An operator violates a structural contract (hermiticity, degree pattern)."""


class DegeneracyError(NCHodgeError):
    """A numerical kernel/multiplicity decision has no clear spectral gap."""


class InvariantBreach(NCHodgeError):
    """A hard invariant failed on an exact model."""


class ConfigError(NCHodgeError):
    """Configuration file could not be parsed or validated."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
