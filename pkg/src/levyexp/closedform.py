"""Exact values for exponential moments of T_r, N_r and rho_r.

Covers the spectrally negative identities, the infimum transform, the
Mittag-Leffler moments of the stable subordinator, the compound Poisson
bridge ``b = log(lambda / (lambda - a))``, Brownian densities and the
asymptotic constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .criteria import Verdict, check_finiteness, solve_gamma, tilt_mean
from .errors import (CriterionFails, LatticeExcluded, MeanInfinite, ModelError, NotSpectrallyNegative,
                     RhoInfinite, TransformGEOne, Unsupported)
from .model import LevyModel, classify, mean, psi_neg

ML_RTOL = 1e-16


@dataclass(frozen=True)
class ClosedForm:
    value: float
    formula_id: str
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "formula_id": self.formula_id, "inputs": dict(self.inputs),
                "mode": "Exact", "error": 0.0}


def _check_a(a):
    if not (isinstance(a, (int, float)) and a > 0 and math.isfinite(a)):
        raise ModelError(f"a must be a positive finite number, got {a!r}")


def _check_r(r, allow_negative=False):
    if not (isinstance(r, (int, float)) and math.isfinite(r)):
        raise ModelError(f"r must be a finite number, got {r!r}")
    if r < 0 and not allow_negative:
        raise ModelError(f"r must be >= 0, got {r}")


def _specneg_gamma(model: LevyModel, a: float) -> float:
    _check_a(a)
    if not classify(model).is_spectrally_negative:
        raise NotSpectrallyNegative("closed forms need a spectrally negative model (no positive jumps, "
                                    "not a subordinator)")
    return solve_gamma(model, a)


def _inputs(model, **kw):
    return {**kw, "model": model.digest()}


def specneg_T(model: LevyModel, a: float, r: float) -> ClosedForm:
    """E[exp(a T_r)] = exp(gamma r): the process creeps over every level."""
    _check_r(r)
    g = _specneg_gamma(model, a)
    return ClosedForm(math.exp(g * r), "specneg_T", _inputs(model, a=a, r=r))


def specneg_N(model: LevyModel, a: float, r: float) -> ClosedForm:
    """E[exp(a N_r)] = exp(gamma r) gamma E[X_1] / a."""
    _check_r(r)
    g = _specneg_gamma(model, a)
    m = mean(model)
    if not math.isfinite(m):
        raise MeanInfinite("E[X_1] must be finite")
    return ClosedForm(math.exp(g * r) * g * m / a, "specneg_N", _inputs(model, a=a, r=r))


def specneg_rho(model: LevyModel, a: float, r: float) -> ClosedForm:
    """E[exp(a rho_r)] = exp(gamma r) exp(-a) E[X_1] / E[X_1 exp(-gamma X_1)]."""
    _check_r(r)
    g = _specneg_gamma(model, a)
    rep = check_finiteness(model, a)
    if rep.verdict_rho is Verdict.Infinite:
        raise RhoInfinite(f"E[exp(a rho_r)] is infinite: {rep.governing_rule} "
                          f"(needs a < R, or a = R with E[X_1 exp(-gamma X_1)] > 0)")
    m = mean(model)
    if not math.isfinite(m):
        raise MeanInfinite("E[X_1] must be finite")
    val = math.exp(g * r - a) * m / rep.tilt_mean
    return ClosedForm(val, "specneg_rho", _inputs(model, a=a, r=r))


def inf_transform(model: LevyModel, theta: float) -> ClosedForm:
    """E[exp(-theta I)] = theta E[X_1] / (-log phi(theta)), I the overall infimum."""
    if not classify(model).is_spectrally_negative:
        raise NotSpectrallyNegative("the infimum transform identity needs a spectrally negative model")
    if not (theta >= 0 and math.isfinite(theta)):
        raise ModelError(f"theta must be >= 0, got {theta}")
    m = mean(model)
    if not (0 < m < math.inf):
        raise CriterionFails(f"E[X_1] = {m} must lie in (0, inf)")
    if theta == 0:
        return ClosedForm(1.0, "inf_transform", _inputs(model, theta=theta))
    p = psi_neg(model, theta)
    if p >= 0:
        raise TransformGEOne(f"phi({theta}) = {math.exp(min(p, 700.0))} >= 1: E[exp(-theta I)] is infinite")
    return ClosedForm(theta * m / (-p), "inf_transform", _inputs(model, theta=theta))


def mittag_leffler(alpha: float, z: float) -> float:
    """E_alpha(z) = sum_n z^n / Gamma(1 + n alpha) for z >= 0.

    Terms are formed in log space; summation stops once the terms decrease and
    the next one falls below ``1e-16`` times the partial sum.
    """
    if not (0 < alpha <= 1):
        raise ModelError(f"alpha must lie in (0, 1], got {alpha}")
    if not z >= 0:
        raise ModelError(f"z must be >= 0, got {z}")
    if z == 0:
        return 1.0
    if math.isinf(z):
        return math.inf
    logz = math.log(z)
    terms = []
    prev = -math.inf
    n = 0
    while True:
        lt = n * logz - math.lgamma(1.0 + n * alpha)
        if lt > 709.0:
            return math.inf
        t = math.exp(lt)
        terms.append(t)
        if lt < prev and t < ML_RTOL * math.fsum(terms):
            break
        prev = lt
        n += 1
    return math.fsum(terms)


def stable_T_moment(alpha: float, a: float, r: float) -> ClosedForm:
    """E[exp(a T_r)] = E_alpha(a r^alpha) for the driftless alpha-stable subordinator."""
    if not (0 < alpha < 1):
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    if not a >= 0:
        raise ModelError(f"a must be >= 0, got {a}")
    _check_r(r)
    return ClosedForm(mittag_leffler(alpha, a * r ** alpha), "ml_stable",
                      {"alpha": alpha, "a": a, "r": r})


def cpp_bridge(lam: float, a: float) -> float:
    """b = log(lambda / (lambda - a)), the walk order matching continuous order a."""
    if not lam > 0:
        raise ModelError(f"lambda must be positive, got {lam}")
    if not (0 < a < lam):
        raise CriterionFails(f"need 0 < a < lambda, got a = {a}, lambda = {lam} (a < lambda is necessary)")
    return -math.log1p(-a / lam)


def cpp_bridge_inv(lam: float, b: float) -> float:
    """a = lambda (1 - exp(-b))."""
    if not lam > 0:
        raise ModelError(f"lambda must be positive, got {lam}")
    if not b > 0:
        raise ModelError(f"b must be positive, got {b}")
    return -lam * math.expm1(-b)


def _asymptotic_setup(model: LevyModel, a: float):
    _check_a(a)
    cls = classify(model)
    if cls.is_lattice:
        raise LatticeExcluded("asymptotic constants exclude lattice models")
    if cls.is_compound_poisson:
        raise Unsupported("asymptotic constants exclude compound Poisson processes")
    if not cls.p_neg_positive:
        raise Unsupported("asymptotic constants need P{X_1 < 0} > 0")
    rep = check_finiteness(model, a)
    if rep.verdict_rho is Verdict.Infinite:
        raise CriterionFails(f"rho-criterion fails ({rep.governing_rule}): needs a < R, "
                             f"or a = R with E[X_1 exp(-gamma X_1)] > 0")
    return rep


def asymptotic_constant_ua(model: LevyModel, a: float) -> float:
    """lim exp(-gamma r) U_a(r) = exp(-a) / (gamma E[X_1 exp(-gamma X_1)])."""
    rep = _asymptotic_setup(model, a)
    return math.exp(-a) / (rep.gamma * rep.tilt_mean)


def asymptotic_constant_rho(model: LevyModel, a: float, cfg=None) -> float:
    """lim exp(-gamma r) E[exp(a rho_r)] = a exp(-a) E[exp(-gamma I)] / (gamma E[X_1 exp(-gamma X_1)]).

    ``E[exp(-gamma I)]`` is exact for spectrally negative models and estimated
    by Monte Carlo (with ``cfg``) otherwise.
    """
    rep = _asymptotic_setup(model, a)
    if classify(model).is_spectrally_negative:
        einf = inf_transform(model, rep.gamma).value
    else:
        from .montecarlo import PathConfig, estimate_inf_transform
        einf = estimate_inf_transform(model, rep.gamma, cfg or PathConfig()).mean
    return a * math.exp(-a) * einf / (rep.gamma * rep.tilt_mean)


def asymptotic_constant_T(model: LevyModel, a: float) -> float:
    """lim exp(-gamma r) E[exp(a T_r)]; identically 1 for spectrally negative models."""
    _check_a(a)
    if not classify(model).is_spectrally_negative:
        raise NotSpectrallyNegative("the T constant is only available for spectrally negative models; "
                                    "use montecarlo.empirical_T_asymptote")
    rep = check_finiteness(model, a)
    if rep.verdict_T is Verdict.Infinite:
        raise CriterionFails(f"T-criterion fails ({rep.governing_rule}): needs a <= R")
    return 1.0


def _check_bm(mu, r, y, r_positive):
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    if r < 0 or (r_positive and r == 0):
        raise ModelError(f"r must be {'> 0' if r_positive else '>= 0'}, got {r}")
    if not y > 0:
        raise ModelError(f"y must be positive, got {y}")


def bm_T_density(mu: float, r: float, y: float) -> float:
    """Density of T_r at y for Brownian motion with drift mu and unit variance."""
    _check_bm(mu, r, y, True)
    return r / math.sqrt(2 * math.pi) * math.exp(mu * r - 0.5 * mu * mu * y - r * r / (2 * y)
                                                 - 1.5 * math.log(y))


def bm_rho_density(mu: float, r: float, y: float) -> float:
    """Density of rho_r at y for Brownian motion with drift mu and unit variance."""
    _check_bm(mu, r, y, False)
    return mu / math.sqrt(2 * math.pi * y) * math.exp(mu * r - 0.5 * mu * mu * y - r * r / (2 * y))
