"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised when a configuration is invalid.

    Carries the full list of problems found, not just the first one.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SolverFailure(RuntimeError):
    """A linear or nonlinear solve did not converge (after retries, if any)."""
