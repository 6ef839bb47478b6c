import math

import numpy as np
import pytest
from scipy import special, stats

from levyexp.closedform import inf_transform, specneg_N, specneg_T, specneg_rho
from levyexp.criteria import solve_gamma
from levyexp.errors import CriterionFails, HorizonOverflow, ModelError, Unsupported, VarianceUnsafe
from levyexp.model import Exponential, LevyModel, TwoPointMass
from levyexp.montecarlo import (Mode, PathConfig, estimate_inf_transform, estimate_moment_N, estimate_moment_T,
                                estimate_moment_rho, estimate_overshoot, sample_increments, sojourn_paths,
                                stable_samples)


def _agrees(est, exact, k=3.0):
    return abs(est.mean - exact) <= k * est.std_err + est.truncation_cert + 1e-12 * abs(exact)


def test_path_config_validation():
    for kw in (dict(n_paths=0), dict(step=0.0), dict(horizon=-1.0), dict(seed=-1), dict(workers=0),
               dict(epsilon_tail=1.0), dict(n_paths=2.5)):
        with pytest.raises(ModelError):
            PathConfig(**kw)


def test_increments_brownian(bm):
    x = sample_increments(bm, 2.0, 20_000)
    assert stats.kstest(x, stats.norm(loc=2.0, scale=math.sqrt(2.0)).cdf).pvalue > 0.01


def test_increments_cpp_moments():
    m = LevyModel.compound_poisson(2.0, TwoPointMass(-1.0, 0.4, 1.0, 0.6), drift=0.3)
    n, t = 50_000, 1.5
    x = sample_increments(m, t, n)
    assert abs(x.mean() - t * (0.3 + 2 * 0.2)) < 4 * math.sqrt(2 * t / n)
    assert x.var() == pytest.approx(2 * t, rel=0.05)


def test_increments_stable_against_levy():
    x = stable_samples(0.5, 20_000)
    assert stats.kstest(x, stats.levy(scale=0.5).cdf).pvalue > 0.01


def test_increment_streams_are_independent(bm):
    a = sample_increments(bm, 1.0, 1000, stream=0)
    b = sample_increments(bm, 1.0, 1000, stream=1)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, sample_increments(bm, 1.0, 1000, stream=0))


def test_T_exact_mode_spectrally_negative(bm):
    est = estimate_moment_T(bm, 0.375, 2.0, PathConfig(n_paths=100))
    assert est.mode is Mode.Exact and est.std_err == 0.0
    assert est.mean == pytest.approx(specneg_T(bm, 0.375, 2.0).value, rel=1e-15)


def test_T_direct_brownian(bm, small_cfg):
    est = estimate_moment_T(bm, 0.2, 1.0, small_cfg, mode="Direct")
    assert _agrees(est, specneg_T(bm, 0.2, 1.0).value)


def test_T_esscher_brownian_has_no_spread(bm, small_cfg):
    est = estimate_moment_T(bm, 0.375, 1.0, small_cfg, mode="EsscherIS")
    assert est.mean == pytest.approx(math.exp(0.5), rel=1e-12)


def test_T_cpp_subordinator_renewal_oracle(small_cfg):
    # jumps Exp(1): 1 + Poisson(r) jumps are needed, so E exp(a T) = q exp(r (q - 1)), q = lam / (lam - a)
    lam, a, r = 2.0, 0.5, 1.5
    m = LevyModel.compound_poisson(lam, Exponential(1.0))
    q = lam / (lam - a)
    est = estimate_moment_T(m, a, r, small_cfg)
    assert est.mode is Mode.Direct
    assert _agrees(est, q * math.exp(r * (q - 1)))


def test_T_stable_mittag_leffler(small_cfg, stable_half):
    est = estimate_moment_T(stable_half, 1.0, 1.0, small_cfg)
    assert _agrees(est, float(special.erfcx(-1.0)))


def test_T_is_vs_direct_two_sided(jd_two_point, small_cfg):
    from levyexp.criteria import compute_R
    a = compute_R(jd_two_point) / 4
    d = estimate_moment_T(jd_two_point, a, 1.0, small_cfg, mode="Direct")
    s = estimate_moment_T(jd_two_point, a, 1.0, small_cfg, mode="EsscherIS")
    assert abs(d.mean - s.mean) <= 3 * math.hypot(d.std_err, s.std_err) + d.truncation_cert + s.truncation_cert
    assert s.n_eff <= small_cfg.n_paths


def test_T_errors(bm, cpp_sub):
    with pytest.raises(CriterionFails):
        estimate_moment_T(bm, 0.6, 1.0)
    with pytest.raises(VarianceUnsafe):
        estimate_moment_T(bm, 0.3, 1.0, PathConfig(n_paths=10), mode="Direct")
    with pytest.raises(VarianceUnsafe):
        estimate_moment_T(cpp_sub, 1.0, 1.0, PathConfig(n_paths=10))
    with pytest.raises(Unsupported):
        estimate_moment_T(cpp_sub, 0.5, 1.0, PathConfig(n_paths=10), mode="EsscherIS")
    m = LevyModel.jump_diffusion(1.0, 1.0, 1.0, TwoPointMass(-1.0, 0.5, 1.0, 0.5))
    with pytest.raises(HorizonOverflow):
        estimate_moment_T(m, 0.1, 1.0, PathConfig(n_paths=10, horizon=1.0))


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_N_and_rho_brownian(bm, small_cfg, r):
    a = 0.2
    n = estimate_moment_N(bm, a, r, small_cfg)
    p = estimate_moment_rho(bm, a, r, small_cfg)
    assert _agrees(n, specneg_N(bm, a, r).value)
    assert _agrees(p, specneg_rho(bm, a, r).value)


def test_N_and_rho_jump_diffusion_negative_exponential(jd_neg_exp, small_cfg):
    a = 0.04
    assert _agrees(estimate_moment_N(jd_neg_exp, a, 0.5, small_cfg), specneg_N(jd_neg_exp, a, 0.5).value)
    assert _agrees(estimate_moment_rho(jd_neg_exp, a, 0.5, small_cfg), specneg_rho(jd_neg_exp, a, 0.5).value)


def test_sojourn_pure_jump_linear_paths(small_cfg):
    # CPP with drift and no Gaussian part: N and rho by the exact linear-motion kernel
    m = LevyModel.compound_poisson(1.0, Exponential(0.5, -1), drift=1.0)
    a = 0.05
    assert _agrees(estimate_moment_N(m, a, 1.0, small_cfg), specneg_N(m, a, 1.0).value)
    assert _agrees(estimate_moment_rho(m, a, 1.0, small_cfg), specneg_rho(m, a, 1.0).value)


def test_sojourn_ordering_per_path(jd_two_point):
    T, N, R, _, _ = sojourn_paths(jd_two_point, 0.05, 1.0, PathConfig(n_paths=2000))
    assert np.all(T <= N + 1e-12) and np.all(N <= R + 1e-12)


def test_rho_subordinator_equals_T(cpp_sub, small_cfg):
    t = estimate_moment_T(cpp_sub, 0.5, 1.0, small_cfg)
    p = estimate_moment_rho(cpp_sub, 0.5, 1.0, small_cfg)
    assert p.mean == t.mean and p.provenance["quantity"] == "rho"


def test_rho_infinite_rejected(bm):
    with pytest.raises(CriterionFails):
        estimate_moment_rho(bm, 0.5, 1.0)


def test_inf_transform_brownian(bm, small_cfg):
    est = estimate_inf_transform(bm, 0.5, small_cfg)
    assert _agrees(est, inf_transform(bm, 0.5).value)


def test_overshoot_memoryless():
    m = LevyModel.compound_poisson(1.0, Exponential(1.0), drift=-0.5)
    a = 0.04
    g = solve_gamma(m, a)
    (s,) = estimate_overshoot(m, a, [5.0], PathConfig(n_paths=20_000))
    # under the tilted law the jumps are exponential with mean 1 / (1 + gamma)
    assert stats.kstest(s.values, stats.expon(scale=1 / (1 + g)).cdf).pvalue > 0.01


def test_reproducible_and_worker_independent(jd_two_point):
    cfg1 = PathConfig(n_paths=4000, seed=7, workers=1)
    cfg2 = PathConfig(n_paths=4000, seed=7, workers=2)
    a = estimate_moment_N(jd_two_point, 0.05, 1.0, cfg1)
    b = estimate_moment_N(jd_two_point, 0.05, 1.0, cfg2)
    assert a.to_dict() == b.to_dict()
    c = estimate_moment_N(jd_two_point, 0.05, 1.0, PathConfig(n_paths=4000, seed=8))
    assert c.mean != a.mean


def test_provenance_fields(bm):
    d = estimate_moment_T(bm, 0.2, 1.0, PathConfig(n_paths=100), mode="Direct").to_dict()
    prov = d["provenance"]
    assert prov["seed"] == PathConfig().seed and prov["rng"] == "splitmix64" and prov["n_paths"] == 100
    assert "workers" not in prov


def test_increment_sample_means():
    bm = LevyModel.brownian(1.0, 1.0)
    assert abs(sample_increments(bm, 1.0, 10 ** 6).mean() - 1.0) <= 3e-3
    x = sample_increments(LevyModel.compound_poisson(2.0, Exponential(1.0)), 1.0, 10 ** 6)
    assert abs(x.mean() - 2.0) <= 3 * x.std(ddof=1) / 1e3
