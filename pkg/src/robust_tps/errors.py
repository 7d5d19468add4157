"""Exception and warning types raised by robust_tps."""


class TpsError(Exception):
    """Base class for all robust_tps errors."""


class DimensionError(TpsError, ValueError):
    """Incompatible dimensions, or 2m <= d, or too few points."""


class DuplicatePoints(TpsError, ValueError):
    """Two or more design points coincide."""


class RankDeficient(TpsError, ValueError):
    """The polynomial design matrix does not have full column rank."""


class SingularSystem(TpsError, ArithmeticError):
    """The penalized normal equations could not be factorized."""


class LeverageOne(TpsError, ArithmeticError):
    """A hat-matrix diagonal entry is numerically one."""


class AllFailed(TpsError, RuntimeError):
    """Every candidate smoothing parameter failed to produce a fit."""


class NoConvergenceWarning(UserWarning):
    """IRLS stopped at ``max_iter`` before meeting the tolerance."""
