"""Finiteness criteria for exp(a T_r), exp(a N_r) and exp(a rho_r).

The moment boundary is ``R = sup_{theta >= 0} -Psi(-theta)`` and, for
``0 < a <= R``, the tilt ``gamma`` is the smallest positive root of
``phi(gamma) = exp(-a)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ModelError, NoRoot, Unsupported
from .model import (INF, Family, LevyModel, TwoPointMass, classify, dpsi_neg, is_degenerate,
                    psi_neg)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GAMMA_RTOL = 1e-12
MAX_DOUBLINGS = 60


class Verdict(str, enum.Enum):
    Finite = "Finite"
    Infinite = "Infinite"


@dataclass(frozen=True)
class Maximizer:
    """Result of maximizing theta -> -Psi(-theta) over theta >= 0."""

    R: float
    theta_star: float  # argmax; inf when R is not attained
    interior: bool  # derivative vanishes at theta_star


@dataclass(frozen=True)
class CriteriaReport:
    a: float
    R: float
    gamma: Optional[float]
    tilt_mean: Optional[float]
    verdict_T: Verdict
    verdict_N: Verdict
    verdict_rho: Verdict
    governing_rule: str

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "R": "inf" if math.isinf(self.R) else self.R,
            "gamma": self.gamma,
            "tilt_mean": self.tilt_mean,
            "verdict_T": self.verdict_T.value,
            "verdict_N": self.verdict_N.value,
            "verdict_rho": self.verdict_rho.value,
            "governing_rule": self.governing_rule,
        }


def _neg_psi(model, theta):
    return -psi_neg(model, theta)


def _cpp_effective_rate(model: LevyModel) -> float:
    law = model.jump_law
    zero = law.zero_mass() if isinstance(law, TwoPointMass) else 0.0
    return model.jump_rate * (1.0 - zero)


def maximize_exponent(model: LevyModel) -> Maximizer:
    """Locate R and its maximizer.

    Subordinators are handled analytically (the map is nondecreasing).  For
    everything else a doubling bracket is grown until the concave map turns
    down, then golden-section search narrows it and a bisection on the sign of
    the analytic derivative polishes the maximizer.
    """
    cls = classify(model)
    if cls.is_subordinator:
        if is_degenerate(model):
            return Maximizer(0.0, 0.0, False)
        if cls.is_compound_poisson:
            return Maximizer(_cpp_effective_rate(model), INF, False)
        return Maximizer(INF, INF, False)

    edge = model.theta_edge()
    if dpsi_neg(model, 0.0) >= 0.0:
        # E[X_1] <= 0: the map starts nonincreasing, so the sup sits at 0.
        return Maximizer(0.0, 0.0, True)

    prev, hi = 0.0, min(1.0, 0.5 * edge)
    f_hi = _neg_psi(model, hi)
    if f_hi > _neg_psi(model, 0.0):
        for n in range(MAX_DOUBLINGS + 1):
            if n == MAX_DOUBLINGS:
                return Maximizer(INF, INF, False)
            nxt = 2.0 * hi if 2.0 * hi < edge else 0.5 * (hi + edge)
            f_nxt = _neg_psi(model, nxt)
            if f_nxt <= f_hi:
                hi = nxt
                break
            prev, hi, f_hi = hi, nxt, f_nxt
    lo = prev

    # golden-section search on [lo, hi]
    a_, b_ = lo, hi
    c_ = b_ - GOLDEN * (b_ - a_)
    d_ = a_ + GOLDEN * (b_ - a_)
    fc, fd = _neg_psi(model, c_), _neg_psi(model, d_)
    for _ in range(200):
        if b_ - a_ <= 1e-10 * max(1.0, b_):
            break
        if fc >= fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - GOLDEN * (b_ - a_)
            fc = _neg_psi(model, c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + GOLDEN * (b_ - a_)
            fd = _neg_psi(model, d_)

    # polish: the derivative of Psi(-theta) is increasing; find its sign change
    lo_p = max(0.0, a_ - 1e-6 * max(1.0, a_))
    hi_p = min(b_ + 1e-6 * max(1.0, b_), 0.5 * (b_ + edge) if math.isfinite(edge) else INF)
    interior = dpsi_neg(model, lo_p) < 0.0 < dpsi_neg(model, hi_p)
    if interior:
        for _ in range(200):
            mid = 0.5 * (lo_p + hi_p)
            if mid <= lo_p or mid >= hi_p:
                break
            if dpsi_neg(model, mid) < 0.0:
                lo_p = mid
            else:
                hi_p = mid
        theta = 0.5 * (lo_p + hi_p)
    else:
        theta = 0.5 * (a_ + b_)
    return Maximizer(_neg_psi(model, theta), theta, interior)


def compute_R(model: LevyModel) -> float:
    """R = sup over theta >= 0 of -Psi(-theta) (possibly +inf)."""
    return maximize_exponent(model).R


def _require_tilt(model: LevyModel):
    if not classify(model).p_neg_positive:
        raise Unsupported("P{X_1 < 0} = 0: subordinators have no exponential tilt")


def solve_gamma(model: LevyModel, a: float) -> float:
    """Minimal gamma > 0 with phi(gamma) = exp(-a), found by bisection on [0, theta*]."""
    if not a > 0:
        raise ModelError(f"a must be positive, got {a}")
    _require_tilt(model)
    mx = maximize_exponent(model)
    tol = GAMMA_RTOL * max(1.0, mx.R)
    if a > mx.R + tol:
        raise NoRoot(f"a = {a} > R = {mx.R}: no tilt solves phi(gamma) = exp(-a)")
    if a >= mx.R - tol:
        return mx.theta_star
    lo, hi = 0.0, mx.theta_star
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if psi_neg(model, mid) + a > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 0.25 * GAMMA_RTOL * hi:
            break
    return 0.5 * (lo + hi)


def tilt_mean(model: LevyModel, gamma: float) -> float:
    """E[X_1 exp(-gamma X_1)] = -phi'(gamma), evaluated analytically."""
    if gamma < 0 and model.is_stable:
        raise ModelError("gamma must be >= 0 for the stable subordinator")
    if gamma == 0.0:
        from .model import mean
        return mean(model)
    p = psi_neg(model, gamma)
    if math.isinf(p):
        raise ModelError(f"phi is infinite at gamma = {gamma}")
    return -math.exp(p) * dpsi_neg(model, gamma)


def esscher(model: LevyModel, gamma: float) -> LevyModel:
    """Law of X under the measure with density exp(-gamma X_t + a t), a = -log phi(gamma)."""
    if gamma == 0.0:
        return model
    if model.is_stable:
        raise Unsupported("the tilted stable subordinator leaves the parametric family")
    if not (model.theta_low() < gamma < model.theta_edge()):
        raise ModelError(f"gamma = {gamma} is outside the finiteness domain of phi")
    law = model.jump_law
    rate = model.jump_rate
    if model.has_jumps:
        rate = rate * law.mgf(gamma)
        law = law.tilt(gamma)
    return LevyModel(model.family, drift=model.drift - gamma * model.gaussian_var,
                     gaussian_var=model.gaussian_var, jump_rate=rate, jump_law=law,
                     stable_index=model.stable_index)


def check_finiteness(model: LevyModel, a: float) -> CriteriaReport:
    if not a > 0:
        raise ModelError(f"a must be positive, got {a}")
    if is_degenerate(model):
        raise ModelError("X is identically zero (needs P{X_1 = 0} < 1)")
    F, I = Verdict.Finite, Verdict.Infinite
    cls = classify(model)
    if not cls.p_neg_positive:
        if cls.is_compound_poisson:
            lam = _cpp_effective_rate(model)
            v = F if a < lam else I
            return CriteriaReport(a, lam, None, None, v, v, v, "subordinator: a<lambda")
        return CriteriaReport(a, INF, None, None, F, F, F, "subordinator: every a>0")

    mx = maximize_exponent(model)
    R = mx.R
    tol = GAMMA_RTOL * max(1.0, R)
    if a > R + tol:
        return CriteriaReport(a, R, None, None, I, I, I, "a>R")
    gamma = solve_gamma(model, a)
    if a >= R - tol:
        # gamma is the maximizer; an interior maximizer has phi'(gamma) = 0 exactly
        tm = 0.0 if mx.interior else tilt_mean(model, gamma)
        v_rho = F if tm > 0 else I
        rule = "a=R & tilt_mean>0" if tm > 0 else "a=R & tilt_mean=0"
        return CriteriaReport(a, R, gamma, tm, F, F, v_rho, rule)
    return CriteriaReport(a, R, gamma, tilt_mean(model, gamma), F, F, F, "a<R")
