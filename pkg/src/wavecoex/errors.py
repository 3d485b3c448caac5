"""Exception types shared across the toolkit."""


class ConfigurationError(ValueError):
    """Raised when parameters violate a documented precondition."""


class SimulationError(RuntimeError):
    """Raised when a run fails numerically (non-finite metrics, singular solves)."""
