"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two fields live on different grids (or have incompatible shapes)."""


class SingularPointError(ArithmeticError):
    """The N functional hit a node of psi with nonzero gradient and no regularization."""

    def __init__(self, index, message=None):
        self.index = tuple(int(i) for i in index)
        super().__init__(message or f"singular point at grid index {self.index}")


class IntegrationError(RuntimeError):
    """Norm drift exceeded tolerance during time integration."""

    def __init__(self, time, drift, limit):
        self.time = float(time)
        self.drift = float(drift)
        self.limit = float(limit)
        super().__init__(
            f"norm drift {self.drift:.3e} exceeds {self.limit:.3e} at t={self.time:.6g}"
        )


class EmptyMixtureError(ValueError):
    """Every measurement outcome fell below the truncation threshold."""


class FitConditioningError(ValueError):
    """The sample abscissae do not span enough range for the requested fit."""


class QuadratureError(RuntimeError):
    """A quadrature did not reach its tolerance (or the grid does not resolve the integrand)."""


class UnitError(ValueError):
    """Dimensional mismatch in a scales computation."""


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""
