"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario parameters or malformed configuration input."""


class InfeasibleError(RuntimeError):
    """No strictly interior association exists for the given budgets."""

    def __init__(self, message, overloaded=()):
        super().__init__(message)
        self.overloaded = tuple(overloaded)


class SolverError(RuntimeError):
    """Iterative solve failed to converge; carries the iteration trace."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = tuple(trace)
