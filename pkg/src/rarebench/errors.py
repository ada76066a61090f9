"""Exception types shared across the package."""


class RarebenchError(Exception):
    """Base class for all package errors."""


class ConfigError(RarebenchError):
    """Invalid or incomplete configuration."""


class SimulationDiverged(RarebenchError):
    """Raised when an integration step produces non-finite values.

    ``last_state`` holds the last finite state vector.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class DomainError(RarebenchError, ValueError):
    pass


class InsufficientFlux(RarebenchError):
    """No outward crossings of the first interface within the simulation budget."""


class EmptyDatasetError(RarebenchError, ValueError):
    pass


class UnknownCategoryError(RarebenchError, KeyError):
    pass


class DivergenceError(RarebenchError):
    """Non-finite training loss."""
