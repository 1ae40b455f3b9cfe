"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the range where the quantity is defined."""


class ConfigurationError(ValueError):
    """A run configuration cannot be resolved (bad preset, missing norm, ...)."""


class NumericalError(RuntimeError):
    """The discrete evolution produced non-finite values.

    ``time`` and ``nodal`` hold the last state so callers can dump it.
    """

    def __init__(self, message, time=None, nodal=None):
        super().__init__(message)
        self.time = time
        self.nodal = nodal
