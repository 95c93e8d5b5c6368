"""Exception taxonomy for fbfqv.

Each error kind maps to one failure family promised by the public contracts:
bad arguments, geometrically unusable input, configured resource caps,
numerical breakdown (with diagnostics attached), and config validation.
"""


class FbfqvError(Exception):
    """Base class for all library errors."""


class ParameterError(FbfqvError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(FbfqvError, ValueError):
    """Input is geometrically degenerate (collinear, empty, duplicated...)."""


class ResourceLimitError(FbfqvError, RuntimeError):
    """A configured cap (point count, edge count, expected count) is exceeded."""


class NumericalError(FbfqvError, RuntimeError):
    """A numerical procedure failed; carries diagnostics when available."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(FbfqvError, ValueError):
    """Experiment configuration is invalid; lists the offending fields."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
