"""Exception hierarchy.

Errors that signal a violated moment criterion (asking for a quantity that is
infinite, or an estimator whose variance is not finite) derive from
:class:`CriterionError`; the CLI maps them to exit code 2.  Everything else is
a usage problem (exit code 1).
"""


class LevyExpError(Exception):
    """Base class for all package errors."""


class ModelError(LevyExpError, ValueError):
    """Invalid model parameters or a malformed model document."""


class Unsupported(LevyExpError):
    """The operation is not available for this model family."""


class CriterionError(LevyExpError):
    """A finiteness criterion or a variance guard is violated."""


class NoRoot(CriterionError):
    """No tilt solves phi(gamma) = exp(-a) because a > R."""


class CriterionFails(CriterionError):
    """The requested exponential moment is infinite."""


class RhoInfinite(CriterionFails):
    """The last-exit-time moment is infinite (a > R, or a = R with zero tilted mean)."""


class MeanInfinite(CriterionError):
    """E[X_1] is infinite."""


class NotSpectrallyNegative(Unsupported):
    """A formula valid only for spectrally negative processes was requested."""


class TransformGEOne(CriterionError):
    """phi(theta) >= 1, so the infimum transform is not covered."""


class LatticeExcluded(Unsupported):
    """Asymptotic constants are not defined for lattice or compound Poisson models."""


class VarianceUnsafe(CriterionError):
    """Direct sampling of exp(a T) requested with 2a > R (infinite variance)."""


class HorizonOverflow(CriterionError):
    """The certified truncation horizon exceeds the hard cap."""
