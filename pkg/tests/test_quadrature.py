import math

import numpy as np
import pytest
from scipy import stats

from levyexp.closedform import asymptotic_constant_ua
from levyexp.errors import CriterionError, ModelError, Unsupported
from levyexp.model import Exponential, LevyModel, ShiftedExponential, TwoPointMass
from levyexp.quadrature import (QVerdict, U1_a, U_a, V1_a, V_a, bm_density_moment, marginal_cdf,
                                sojourn_zero_moment)


def _poisson_mixture_cdf(lam, t, x, cond_cdf, kmax=200):
    k = np.arange(kmax)
    w = stats.poisson.pmf(k, lam * t)
    return float(sum(wk * cond_cdf(int(kk), x) for kk, wk in zip(k, w) if wk > 1e-300))


def test_marginal_brownian(bm):
    for t, x in ((1.0, 0.0), (4.0, 2.0), (0.01, -0.3)):
        assert marginal_cdf(bm, t, x) == pytest.approx(stats.norm.cdf(x, loc=t, scale=math.sqrt(t)), rel=1e-12)


def test_marginal_deep_tail_relative_accuracy(bm):
    t, x = 400.0, 0.0
    exact = stats.norm.logcdf(x, loc=t, scale=math.sqrt(t))
    assert math.log(marginal_cdf(bm, t, x)) == pytest.approx(exact, rel=1e-9)


def test_marginal_cpp_exponential_against_poisson_gamma_mixture():
    m = LevyModel.compound_poisson(1.5, Exponential(1.0), drift=-0.5)
    t, x = 3.0, 0.4

    def cond(k, x):
        y = x + 0.5 * t
        if k == 0:
            return 1.0 if y >= 0 else 0.0
        return stats.gamma.cdf(y, k)
    assert marginal_cdf(m, t, x) == pytest.approx(_poisson_mixture_cdf(1.5, t, x, cond), rel=1e-9)


def test_marginal_two_point_cpp_against_poisson_binomial_mixture():
    law = TwoPointMass(-1.0, 0.4, 1.0, 0.6)
    m = LevyModel.compound_poisson(2.0, law)
    t, x = 2.5, 1.0

    def cond(k, x):
        # k jumps, j of them up: position 2j - k
        j = np.arange(k + 1)
        return float(np.sum(stats.binom.pmf(j, k, 0.6)[2 * j - k <= x + 1e-12]))
    assert marginal_cdf(m, t, x) == pytest.approx(_poisson_mixture_cdf(2.0, t, x, cond), rel=1e-10)


def test_marginal_two_point_jump_diffusion():
    m = LevyModel.jump_diffusion(0.5, 1.0, 1.0, TwoPointMass(-1.0, 0.5, 1.0, 0.5))
    t, x = 2.0, 0.3

    def cond(k, x):
        j = np.arange(k + 1)
        pos = 2 * j - k + 0.5 * t
        return float(np.sum(stats.binom.pmf(j, k, 0.5) * stats.norm.cdf(x, loc=pos, scale=math.sqrt(t))))
    assert marginal_cdf(m, t, x) == pytest.approx(_poisson_mixture_cdf(1.0, t, x, cond), rel=1e-9)


def test_marginal_jump_diffusion_exponential():
    m = LevyModel.jump_diffusion(1.0, 1.0, 1.0, Exponential(0.5, -1))
    t, x = 2.0, 0.5
    rng = np.random.default_rng(5)
    n = 400_000
    k = rng.poisson(t, n)
    s = rng.gamma(np.maximum(k, 1), 0.5) * (k > 0)
    xs = t + math.sqrt(t) * rng.standard_normal(n) - s
    p = float(np.mean(xs <= x))
    assert marginal_cdf(m, t, x) == pytest.approx(p, abs=4 * math.sqrt(p * (1 - p) / n))


def test_marginal_stable_against_levy():
    m = LevyModel.stable_subordinator(0.5)
    # X_1 has Laplace transform exp(-sqrt(theta)): Levy law with scale 1/2
    p = marginal_cdf(m, 1.0, 1.0)
    assert p == pytest.approx(stats.levy(scale=0.5).cdf(1.0), abs=3e-3)


def test_U_a_interior_against_closed_form():
    # for BM(1,1), U_a(r) = integral of exp(a t) Phi((r - t)/sqrt t); its asymptote is 4 exp(0.5 r)
    m = LevyModel.brownian(1.0, 1.0)
    res = U_a(m, 0.375, 10.0)
    assert res.verdict is QVerdict.Convergent and res.tolerance_met
    assert math.exp(-5.0) * res.value == pytest.approx(asymptotic_constant_ua(m, 0.375), rel=2e-2)


def test_U_a_against_scipy(bm):
    from scipy import integrate
    a, r = 0.2, 1.0
    f = lambda t: math.exp(a * t) * stats.norm.cdf(r, loc=t, scale=math.sqrt(t)) if t > 0 else 1.0
    ref = integrate.quad(f, 0, 400, limit=500)[0]
    res = U_a(bm, a, r)
    assert res.value == pytest.approx(ref, rel=1e-7)
    assert abs(res.value - ref) <= res.abs_err + 1e-7 * ref


def test_V_a_against_scipy(bm):
    from scipy import integrate
    a, r = 0.3, 0.5
    f = lambda t: math.exp(a * t) / t * stats.norm.cdf(r, loc=t, scale=math.sqrt(t))
    ref = integrate.quad(f, 1, 600, limit=500)[0]
    assert V_a(bm, a, r).value == pytest.approx(ref, rel=1e-7)


def test_divergence_and_boundary(bm):
    assert U_a(bm, 0.6, 1.0).verdict is QVerdict.Divergent
    assert V_a(bm, 0.6, 1.0).verdict is QVerdict.Divergent
    assert V_a(bm, 0.5, 1.0).verdict is QVerdict.Convergent
    assert U_a(bm, 0.5, 1.0).verdict is QVerdict.Divergent


def test_divergent_result_shape(bm):
    res = U_a(bm, 0.6, 0.0)
    assert res.value is None and res.witness is not None
    d = res.to_dict()
    assert d["verdict"] == "Divergent"


def test_sojourn_zero_moment_brownian(bm):
    res = sojourn_zero_moment(bm, 0.375)
    assert res.value == pytest.approx(4 / 3, rel=1e-6)


def test_sojourn_zero_moment_needs_negative_mass(cpp_sub):
    with pytest.raises(Unsupported):
        sojourn_zero_moment(cpp_sub, 0.5)


def test_series_against_direct_sum(bm):
    a, r = 0.3, 1.0
    n = np.arange(1, 3000)
    terms = np.exp(a * n + stats.norm.logcdf(r, loc=n, scale=np.sqrt(n)))
    terms = np.concatenate([[1.0], terms])
    n = np.concatenate([[0], n])
    assert U1_a(bm, a, r).value == pytest.approx(math.fsum(terms), rel=1e-8)
    h = terms[1:] / n[1:]
    assert V1_a(bm, a, r).value == pytest.approx(math.fsum(h), rel=1e-8)


def test_skeleton_series_dominate_harmonic(bm):
    for r in (0.0, 1.0, 3.0):
        assert U1_a(bm, 0.3, r).value >= V1_a(bm, 0.3, r).value


def test_bm_density_moment_matches_closed_forms():
    assert bm_density_moment("T", 1.0, 0.375, 2.0).value == pytest.approx(math.e, rel=1e-10)
    assert bm_density_moment("rho", 1.0, 0.375, 0.0).value == pytest.approx(2.0, rel=1e-10)
    assert bm_density_moment("rho", 1.0, 0.375, 2.0).value == pytest.approx(2 * math.e, rel=1e-10)
    with pytest.raises(CriterionError):
        bm_density_moment("T", 1.0, 0.6, 1.0)


def test_bad_tolerance_rejected(bm):
    with pytest.raises(ModelError):
        U_a(bm, 0.3, 1.0, tol=0.0)
