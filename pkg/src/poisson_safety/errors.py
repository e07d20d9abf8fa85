"""Exception types shared across the package."""


class OutOfDomain(Exception):
    """A query point lies outside the grid extent or time slice range."""


class DegenerateShape(Exception):
    """A footprint shape violates its geometric invariants."""


class InfeasibleProblem(Exception):
    """QP bounds are inconsistent after presolve."""


class ConfigError(Exception):
    """Scenario configuration is invalid; message carries the field path."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
