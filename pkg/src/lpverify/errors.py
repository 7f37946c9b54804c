"""Exception types shared across the package."""


class LpVerifyError(Exception):
    """Base class for all errors raised by lpverify."""


class PoleError(LpVerifyError, ValueError):
    """Argument sits on a pole of a Gamma factor."""


class DomainError(LpVerifyError, ValueError):
    """Argument lies outside the region where an operation is defined."""


class QuadratureError(LpVerifyError, ArithmeticError):
    """Quadrature did not reach the requested tolerance."""


class StatisticsError(LpVerifyError, ArithmeticError):
    """Monte Carlo estimate is statistically unusable (e.g. weight collapse)."""


class DimensionError(LpVerifyError, ValueError):
    """Vector dimensions do not match the space."""


class RankError(LpVerifyError, ValueError):
    """Gaussian process is not of full rank."""


class ParamError(LpVerifyError, ValueError):
    """Invalid or unknown check parameters."""
