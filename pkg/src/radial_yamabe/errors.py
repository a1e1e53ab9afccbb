"""Exception types shared across the package."""


class YamabeError(Exception):
    """Base class for all package errors."""


class DomainError(YamabeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(YamabeError, ValueError):
    """A query point lies outside a table or a computed trajectory."""


class SingularityError(DomainError):
    """Evaluation at the coordinate singularity r = 0 (or rho = 0)."""


class InvariantError(YamabeError):
    """A structural invariant (e.g. f > 0 for a warp) was violated."""


class ConfigError(YamabeError, ValueError):
    """Invalid solver or run configuration."""


class FitError(YamabeError):
    """A fit could not be performed on the requested data."""


class QuadratureError(YamabeError):
    """Numerical quadrature did not converge."""
