"""Monte Carlo estimators for exponential moments of T_r, N_r and rho_r.

Paths are simulated by compiled kernels (see :mod:`levyexp._kernels`).  First
passage and the running infimum are simulated exactly, event by event.
Sojourn and last exit times are exact for models without a Gaussian part and
use a time grid with Brownian-bridge corrections otherwise.

Every path is followed until a certified stopping rule fires: once the path
sits ``d`` above the level, the expected remaining contribution is bounded
by Chernoff estimates ``P{X_t <= -d} <= exp(-theta d - a' t)`` with
``a' = -Psi(-theta) > a``, and the per-path bounds are averaged into
``truncation_cert``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numba
import numpy as np

from . import _kernels as K
from .criteria import Verdict, check_finiteness, esscher, maximize_exponent
from .errors import CriterionError, CriterionFails, HorizonOverflow, ModelError, TransformGEOne, \
    Unsupported, VarianceUnsafe
from .model import Exponential, LevyModel, ShiftedExponential, TwoPointMass, classify, psi_neg

DEFAULT_SEED = 20240917
RNG_NAME = "splitmix64"

STREAM_T = 1
STREAM_N = 2
STREAM_RHO = 3
STREAM_INF = 4
STREAM_OVERSHOOT = 5
STREAM_STABLE = 6


class Mode(str, enum.Enum):
    Direct = "Direct"
    EsscherIS = "EsscherIS"
    Exact = "Exact"


@dataclass(frozen=True)
class PathConfig:
    """Simulation settings.

    ``step`` is the grid width for Gaussian components, ``horizon`` the hard
    cap on simulated time, ``epsilon_tail`` the relative truncation budget.
    """

    n_paths: int = 100_000
    step: float = 1e-2
    horizon: float = 1e4
    seed: int = DEFAULT_SEED
    workers: int = 1
    epsilon_tail: float = 1e-3

    def __post_init__(self):
        if isinstance(self.n_paths, bool) or int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ModelError(f"n_paths must be a positive integer, got {self.n_paths!r}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ModelError(f"step must be positive, got {self.step!r}")
        if not self.horizon > 0:
            raise ModelError(f"horizon must be positive, got {self.horizon!r}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ModelError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if int(self.workers) < 1:
            raise ModelError(f"workers must be >= 1, got {self.workers!r}")
        if not (0 < self.epsilon_tail < 1):
            raise ModelError(f"epsilon_tail must lie in (0, 1), got {self.epsilon_tail!r}")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "workers", int(self.workers))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n_eff: float
    ci95: Tuple[float, float]
    truncation_cert: float
    mode: Mode
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_err": self.std_err,
            "n_eff": self.n_eff,
            "ci95": list(self.ci95),
            "truncation_cert": self.truncation_cert,
            "mode": self.mode.value,
            "provenance": dict(self.provenance),
        }


@dataclass(frozen=True)
class OvershootSample:
    values: np.ndarray
    r: float
    gamma: float


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _pack(model: LevyModel) -> np.ndarray:
    p = np.zeros(8)
    p[0], p[1], p[2] = model.drift, model.gaussian_var, model.jump_rate
    law = model.jump_law if model.has_jumps else None
    if isinstance(law, Exponential):
        p[3:6] = 1, law.mean, law.sign
    elif isinstance(law, TwoPointMass):
        p[3:8] = 2, law.x_neg, law.p_neg, law.x_pos, law.p_pos
    elif isinstance(law, ShiftedExponential):
        p[3:7] = 3, law.mean, law.sign, law.loc
    return p


def _set_workers(cfg: PathConfig):
    numba.set_num_threads(max(1, min(cfg.workers, numba.config.NUMBA_NUM_THREADS)))


def _check_a(a):
    if not (isinstance(a, (int, float)) and a > 0 and math.isfinite(a)):
        raise ModelError(f"a must be a positive finite number, got {a!r}")


def _check_r(r):
    if not (isinstance(r, (int, float)) and math.isfinite(r)):
        raise ModelError(f"r must be a finite number, got {r!r}")


def _provenance(model, cfg, quantity, **kw):
    return {"quantity": quantity, "model": model.digest(), "seed": cfg.seed, "rng": RNG_NAME,
            "n_paths": cfg.n_paths, "step": cfg.step, "horizon": cfg.horizon,
            "epsilon_tail": cfg.epsilon_tail, **kw}


def _summarize(values: np.ndarray, cert: float, mode: Mode, prov: dict, kish: bool = False) -> McEstimate:
    n = values.shape[0]
    m = float(np.sum(values) / n)
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    if mode is Mode.Exact:
        se = 0.0
    if kish and np.any(values):
        n_eff = float(np.sum(values) ** 2 / np.sum(values * values))
    else:
        n_eff = float(n)
    return McEstimate(m, se, n_eff, (m - 1.96 * se, m + 1.96 * se), float(cert), mode, prov)


def _pairs(model: LevyModel, a: float, R: float):
    from .quadrature import _chernoff_pairs
    try:
        pairs = _chernoff_pairs(model, a, R)
    except CriterionError as exc:
        raise HorizonOverflow(f"a = {a} is numerically at the boundary R = {R}; no certified horizon "
                              f"exists ({exc})") from None
    th = np.array([p[0] for p in pairs])
    dl = np.array([p[1] for p in pairs])
    return th, dl


def _passage_horizon(th, dl, a, r, eps):
    """H with E[exp(a T); T > H] <= eps, and the certified bound at that H."""
    rr = max(r, 0.0)
    hs = (th * rr + np.log1p(a / dl) - math.log(eps)) / dl
    j = int(np.argmin(hs))
    H = float(hs[j])
    cert = math.exp(th[j] * rr - dl[j] * H) * (1.0 + a / dl[j])
    return H, cert


def _report(model, a):
    rep = check_finiteness(model, a)
    return rep, classify(model)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def stable_samples(alpha: float, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Exact draws of X_1 for the driftless alpha-stable subordinator."""
    if not 0 < alpha < 1:
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")
    return K.batch_stable(np.uint64(seed), STREAM_STABLE, int(n), float(alpha))


def sample_increments(model: LevyModel, t: float, n: int, stream: int = 0,
                      seed: int = DEFAULT_SEED) -> np.ndarray:
    """Exact draws of X_t; ``stream`` separates independent sample sets under one seed."""
    if not (t > 0 and math.isfinite(t)):
        raise ModelError(f"t must be positive, got {t}")
    if model.is_stable:
        s = K.batch_stable(np.uint64(seed), 1000 + int(stream), int(n), model.stable_index)
        return t ** (1.0 / model.stable_index) * s + model.drift * t
    return K.batch_increments(np.uint64(seed), 1000 + int(stream), int(n), float(t), _pack(model))


# ---------------------------------------------------------------------------
# first passage
# ---------------------------------------------------------------------------

def _passage(model, r, cfg, stream, horizon):
    _set_workers(cfg)
    return K.batch_passage(np.uint64(cfg.seed), stream, cfg.n_paths, float(r), _pack(model), float(horizon))


def estimate_moment_T(model: LevyModel, a: float, r: float, cfg: PathConfig = PathConfig(),
                      mode: Optional[str] = None) -> McEstimate:
    """Estimate E[exp(a T_r)].

    The default mode is Exact for spectrally negative models (the estimator
    ``exp(gamma X_{T_r}) = exp(gamma r)`` has zero variance), Direct for
    subordinators, and EsscherIS otherwise.
    """
    _check_a(a)
    _check_r(r)
    rep, cls = _report(model, a)
    if rep.verdict_T is Verdict.Infinite:
        raise CriterionFails(f"E[exp(a T_r)] is infinite ({rep.governing_rule}): needs a <= R = {rep.R}")
    if mode is None:
        mode = Mode.Direct if cls.is_subordinator else (
            Mode.Exact if cls.is_spectrally_negative else Mode.EsscherIS)
    mode = Mode(mode)
    prov = _provenance(model, cfg, "T", a=a, r=r)
    if mode is Mode.Exact:
        if not cls.is_spectrally_negative:
            raise Unsupported("Exact mode needs a spectrally negative model")
        val = math.exp(rep.gamma * r) if r >= 0 else 1.0
        return _summarize(np.full(cfg.n_paths, val), 0.0, Mode.Exact, prov)
    if mode is Mode.EsscherIS and cls.is_subordinator:
        raise Unsupported("subordinators have no exponential tilt; use Direct mode")
    if mode is Mode.Direct:
        # a subordinator's moment of order R is itself infinite, so its bound is strict
        strict = cls.is_subordinator
        if not (2 * a < rep.R if strict else 2 * a <= rep.R * (1 + 1e-12)):
            op = "<" if strict else "<="
            raise VarianceUnsafe(f"Direct sampling of exp(a T) needs 2a {op} R; here 2a = {2 * a}, R = {rep.R}")

    if model.is_stable:
        if model.drift != 0:
            raise Unsupported("Monte Carlo for the stable subordinator needs drift 0")
        _set_workers(cfg)
        T = K.batch_stable_passage(np.uint64(cfg.seed), STREAM_T, cfg.n_paths, float(r), model.stable_index)
        return _summarize(np.exp(a * T), 0.0, Mode.Direct, prov)

    th, dl = _pairs(model, a, rep.R)
    H, cert = _passage_horizon(th, dl, a, r, cfg.epsilon_tail)
    if H > cfg.horizon:
        raise HorizonOverflow(f"certified horizon {H:.4g} exceeds the cap {cfg.horizon:.4g}")
    if mode is Mode.Direct:
        T, _, hit = _passage(model, r, cfg, STREAM_T, H)
        vals = np.where(hit == 1, np.exp(a * T), 0.0)
        return _summarize(vals, cert, Mode.Direct, prov)
    g = rep.gamma
    T, XT, hit = _passage(esscher(model, g), r, cfg, STREAM_T, H)
    vals = np.where(hit == 1, np.exp(g * XT), 0.0)
    return _summarize(vals, cert, Mode.EsscherIS, {**prov, "gamma": g}, kish=True)


# ---------------------------------------------------------------------------
# sojourn and last exit
# ---------------------------------------------------------------------------

def sojourn_paths(model: LevyModel, a: float, r: float, cfg: PathConfig, which: str = "rho",
                  stream: int = STREAM_RHO):
    """Simulate (T_r, N_r, rho_r) per path with the certified stopping rule for ``which``.

    Returns arrays T, N, rho and the per-path bias bounds ``kappa_N(d)`` and
    ``exp(a t) kappa_rho(d)`` at the stopping time.
    """
    rep, cls = _report(model, a)
    if cls.is_subordinator:
        raise Unsupported("for subordinators N_r = rho_r = T_r; use estimate_moment_T")
    th, dl = _pairs(model, a, rep.R)
    eps = cfg.epsilon_tail
    d_star = float(max(0.0, np.min(np.log(a / (dl * eps)) / th)))
    _set_workers(cfg)
    T, N, R, KN, KR, status = K.batch_sojourn(
        np.uint64(cfg.seed), stream, cfg.n_paths, float(r), _pack(model), float(cfg.step), float(a),
        th, dl, math.log(eps), 0 if which == "N" else 1, d_star, float(cfg.horizon))
    bad = int(np.sum(status))
    if bad:
        raise HorizonOverflow(f"{bad} of {cfg.n_paths} paths reached the horizon cap {cfg.horizon:.4g} "
                              f"before the stopping rule certified them")
    return T, N, R, KN, KR


def _sojourn_estimate(model, a, r, cfg, which):
    _check_a(a)
    _check_r(r)
    rep, cls = _report(model, a)
    verdict = rep.verdict_N if which == "N" else rep.verdict_rho
    if verdict is Verdict.Infinite:
        raise CriterionFails(f"E[exp(a {which}_r)] is infinite ({rep.governing_rule})")
    if cls.is_subordinator:
        est = estimate_moment_T(model, a, r, cfg, mode=Mode.Direct)
        return McEstimate(est.mean, est.std_err, est.n_eff, est.ci95, est.truncation_cert, est.mode,
                          {**est.provenance, "quantity": which})
    prov = _provenance(model, cfg, which, a=a, r=r)
    T, N, R, KN, KR = sojourn_paths(model, a, r, cfg, which, STREAM_N if which == "N" else STREAM_RHO)
    if which == "N":
        vals = np.exp(a * N)
        cert = float(np.sum(vals * KN) / vals.shape[0])
    else:
        vals = np.exp(a * R)
        cert = float(np.sum(KR) / vals.shape[0])
    return _summarize(vals, cert, Mode.Direct, prov)


def estimate_moment_N(model: LevyModel, a: float, r: float, cfg: PathConfig = PathConfig()) -> McEstimate:
    """Estimate E[exp(a N_r)], N_r the time spent at or below r."""
    return _sojourn_estimate(model, a, r, cfg, "N")


def estimate_moment_rho(model: LevyModel, a: float, r: float, cfg: PathConfig = PathConfig()) -> McEstimate:
    """Estimate E[exp(a rho_r)], rho_r the last time at or below r."""
    return _sojourn_estimate(model, a, r, cfg, "rho")


# ---------------------------------------------------------------------------
# overshoot, infimum, asymptotics
# ---------------------------------------------------------------------------

def _tilt_setup(model, a):
    _check_a(a)
    rep, cls = _report(model, a)
    if rep.verdict_T is Verdict.Infinite:
        raise CriterionFails(f"E[exp(a T_r)] is infinite ({rep.governing_rule})")
    if cls.is_subordinator:
        raise Unsupported("subordinators have no exponential tilt")
    return rep, cls


def estimate_overshoot(model: LevyModel, a: float, r_list: Sequence[float],
                       cfg: PathConfig = PathConfig()) -> List[OvershootSample]:
    """Samples of X_{T_r} - r under the tilted law, one set per level."""
    rep, cls = _tilt_setup(model, a)
    g = rep.gamma
    tilted = esscher(model, g)
    th, dl = _pairs(model, a, rep.R)
    out = []
    for k, r in enumerate(r_list):
        _check_r(r)
        H, _ = _passage_horizon(th, dl, a, r, cfg.epsilon_tail)
        if H > cfg.horizon:
            raise HorizonOverflow(f"certified horizon {H:.4g} exceeds the cap {cfg.horizon:.4g}")
        T, XT, hit = _passage(tilted, r, cfg, STREAM_OVERSHOOT + 64 * k, H)
        vals = np.maximum(XT[hit == 1] - max(r, 0.0), 0.0) if r >= 0 else np.zeros(int(np.sum(hit)))
        out.append(OvershootSample(vals, float(r), g))
    return out


def estimate_inf_transform(model: LevyModel, gamma: float, cfg: PathConfig = PathConfig()) -> McEstimate:
    """Estimate E[exp(-gamma I)], I the overall infimum of X.

    Paths stop once ``X - I >= log(1/eps) / gamma``.  With ``q`` the mean of
    ``exp(-gamma X)`` at the stopping times, the strong Markov property gives
    ``true <= observed / (1 - q)``, which is the reported certificate.
    """
    if not (gamma >= 0 and math.isfinite(gamma)):
        raise ModelError(f"gamma must be >= 0, got {gamma}")
    prov = _provenance(model, cfg, "inf_transform", gamma=gamma)
    if gamma == 0:
        return _summarize(np.ones(cfg.n_paths), 0.0, Mode.Exact, prov)
    p = psi_neg(model, gamma)
    if p >= 0:
        raise TransformGEOne(f"phi({gamma}) >= 1: E[exp(-gamma I)] is not covered")
    if classify(model).is_subordinator:
        return _summarize(np.ones(cfg.n_paths), 0.0, Mode.Exact, prov)
    gap = math.log(1.0 / cfg.epsilon_tail) / gamma
    _set_workers(cfg)
    I, X, status = K.batch_infimum(np.uint64(cfg.seed), STREAM_INF, cfg.n_paths, _pack(model), gap,
                                   float(cfg.horizon))
    if int(np.sum(status)):
        raise HorizonOverflow(f"{int(np.sum(status))} paths reached the horizon cap {cfg.horizon:.4g}")
    vals = np.exp(-gamma * I)
    m = float(np.sum(vals) / vals.shape[0])
    q = float(np.sum(np.exp(-gamma * X)) / X.shape[0])
    cert = m * q / (1.0 - q) if q < 1 else math.inf
    return _summarize(vals, cert, Mode.Direct, prov)


def empirical_T_asymptote(model: LevyModel, a: float, r_list: Sequence[float],
                          cfg: PathConfig = PathConfig()) -> List[Tuple[float, float]]:
    """Pairs (r, exp(-gamma r) * estimate of E[exp(a T_r)])."""
    rep, _ = _tilt_setup(model, a)
    out = []
    for r in r_list:
        est = estimate_moment_T(model, a, r, cfg)
        out.append((float(r), math.exp(-rep.gamma * r) * est.mean))
    return out
