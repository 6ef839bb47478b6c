import json
import math

import numpy as np
import pytest

from levyexp.errors import ModelError
from levyexp.model import (Exponential, Family, LevyModel, ShiftedExponential, TwoPointMass, classify,
                           laplace_exponent, mean, psi_neg)


def test_brownian_exponent(bm):
    rep = laplace_exponent(bm, 1.0)
    assert rep.psi_neg == pytest.approx(-0.5, abs=1e-15)
    assert rep.phi == pytest.approx(math.exp(-0.5))
    assert rep.finite


@pytest.mark.parametrize("model", [
    LevyModel.brownian(1.0, 1.0),
    LevyModel.compound_poisson(2.0, Exponential(1.0)),
    LevyModel.stable_subordinator(0.5),
    LevyModel.jump_diffusion(0.3, 2.0, 1.5, ShiftedExponential(0.2, 0.7, -1)),
])
def test_exponent_at_zero(model):
    rep = laplace_exponent(model, 0.0)
    assert rep.psi_neg == 0.0 and rep.phi == 1.0


def test_cpp_exponent(cpp_sub):
    assert laplace_exponent(cpp_sub, 1.0).psi_neg == pytest.approx(-1.0, abs=1e-15)


def test_negative_exponential_domain_edge():
    m = LevyModel.jump_diffusion(1.0, 1.0, 1.0, Exponential(0.5, -1))
    assert laplace_exponent(m, 1.9).finite
    rep = laplace_exponent(m, 2.0)
    assert not rep.finite and math.isinf(rep.psi_neg) and math.isinf(rep.phi)


def test_exponent_rejects_bad_theta(bm):
    with pytest.raises(ModelError):
        laplace_exponent(bm, -1.0)
    with pytest.raises(ModelError):
        laplace_exponent(bm, float("nan"))


def test_two_point_exponent_against_direct_sum():
    law = TwoPointMass(-1.0, 0.3, 2.0, 0.7)
    m = LevyModel.jump_diffusion(0.4, 0.5, 1.7, law)
    for th in (0.1, 0.5, 1.3):
        direct = -th * 0.4 + 0.25 * th * th + 1.7 * (0.3 * math.exp(th) + 0.7 * math.exp(-2 * th) - 1)
        assert psi_neg(m, th) == pytest.approx(direct, rel=1e-14)


def test_shifted_exponential_exponent_against_quadrature():
    from scipy import integrate
    law = ShiftedExponential(0.5, 2.0, 1)
    m = LevyModel.compound_poisson(1.0, law)
    th = 0.7
    mgf = integrate.quad(lambda y: math.exp(-th * (0.5 + y)) * math.exp(-y / 2.0) / 2.0, 0, math.inf)[0]
    assert psi_neg(m, th) == pytest.approx(mgf - 1.0, rel=1e-10)


def test_classification_examples(stable_half, bm):
    c = classify(stable_half)
    assert c.is_subordinator and not c.p_neg_positive
    c = classify(bm)
    assert c.is_spectrally_negative and c.p_neg_positive
    c = classify(LevyModel.compound_poisson(2.0, TwoPointMass(-1.0, 0.5, 1.0, 0.5)))
    assert c.is_compound_poisson and c.is_lattice


def test_non_lattice_atoms():
    c = classify(LevyModel.compound_poisson(1.0, TwoPointMass(-1.0, 0.5, math.sqrt(2.0), 0.5)))
    assert c.is_compound_poisson and not c.is_lattice


def test_drift_breaks_compound_poisson():
    c = classify(LevyModel.compound_poisson(1.0, Exponential(1.0), drift=-0.5))
    assert not c.is_compound_poisson and not c.is_spectrally_negative and c.p_neg_positive


def test_mean_examples(bm, cpp_sub, stable_half):
    assert mean(bm) == 1.0
    assert mean(cpp_sub) == pytest.approx(2.0)
    assert math.isinf(mean(stable_half))


@pytest.mark.parametrize("kwargs", [
    dict(family=Family.BrownianDrift, drift=1.0, gaussian_var=-1.0),
    dict(family=Family.StableSubordinator, stable_index=1.2),
    dict(family=Family.StableSubordinator, stable_index=0.5, drift=-1.0),
    dict(family=Family.CompoundPoisson, jump_rate=1.0),
    dict(family=Family.BrownianDrift, drift=float("nan")),
])
def test_invalid_models_rejected(kwargs):
    with pytest.raises(ModelError):
        LevyModel(**kwargs)


def test_unnormalized_two_point_rejected():
    with pytest.raises(ModelError):
        TwoPointMass(-1.0, 0.5, 1.0, 0.6)


@pytest.mark.parametrize("model", [
    LevyModel.brownian(1.0, 1.0),
    LevyModel.compound_poisson(2.0, TwoPointMass(-1.0, 0.4, 1.0, 0.6)),
    LevyModel.jump_diffusion(1.0, 1.0, 1.0, Exponential(0.5, -1)),
    LevyModel.jump_diffusion(0.0, 2.0, 3.0, ShiftedExponential(1.0, 0.5, 1)),
    LevyModel.stable_subordinator(0.3, drift=0.2),
])
def test_json_round_trip(model):
    text = model.to_json()
    back = LevyModel.from_json(text)
    assert back == model
    assert back.to_json() == text


def test_malformed_json_rejected():
    with pytest.raises(ModelError):
        LevyModel.from_json("{not json")
    with pytest.raises(ModelError):
        LevyModel.from_json(json.dumps({"family": "Nope"}))
    with pytest.raises(ModelError):
        LevyModel.from_json(json.dumps({"family": "BrownianDrift", "colour": 1}))


def test_subordinator_exponent_nonincreasing(cpp_sub, stable_half):
    grid = np.linspace(0.0, 10.0, 51)
    for m in (cpp_sub, stable_half):
        vals = [psi_neg(m, float(t)) for t in grid]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
