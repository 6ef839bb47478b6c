"""Exponential moments of first passage, sojourn and last exit times of Levy processes."""
from .criteria import CriteriaReport, Verdict, check_finiteness, compute_R, esscher, solve_gamma, tilt_mean
from .errors import (CriterionError, CriterionFails, HorizonOverflow, LatticeExcluded, LevyExpError,
                     MeanInfinite, ModelError, NoRoot, NotSpectrallyNegative, RhoInfinite, TransformGEOne,
                     Unsupported, VarianceUnsafe)
from .model import (Exponential, Family, LevyModel, ShiftedExponential, TwoPointMass, classify,
                    laplace_exponent)

__version__ = "0.1.0"
