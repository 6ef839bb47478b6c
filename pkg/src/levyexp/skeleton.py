"""Random-walk views: the skeleton-1 walk X_0, X_1, X_2, ... and the embedded jump walk.

For a compound Poisson process with rate lambda, the continuous moments of
order ``a`` and the jump-walk moments of order ``b = log(lambda / (lambda - a))``
are tied together because each visit of the walk lasts an independent
exponential time:

* ``E exp(a T_r) = E exp(b tau(r))``
* ``E exp(a N_r) = E exp(b n(r))``
* ``E exp(a rho_r) = E exp(b (rho(r) + 1))``

where ``tau(r)`` is the first index above ``r``, ``n(r)`` the number of
indices at or below ``r`` and ``rho(r)`` the last such index (``-1`` if none).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .closedform import cpp_bridge
from .criteria import check_finiteness, Verdict
from .errors import CriterionFails, HorizonOverflow, ModelError, Unsupported
from .model import JumpLaw, LevyModel, classify, psi_neg
from .montecarlo import (McEstimate, Mode, PathConfig, _check_a, _check_r, _pack, _pairs, _provenance,
                         _set_workers, _summarize, estimate_moment_N, estimate_moment_rho,
                         estimate_moment_T, sample_increments)

STREAM_WALK = 16
STREAM_SKELETON = 17
STREAM_JOINT = 18
MAX_WALK_STEPS = 10 ** 7


@dataclass(frozen=True)
class WalkPath:
    values: np.ndarray
    truncated_at: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] == 0 or v[0] != 0.0:
            raise ModelError("a walk path is a nonempty sequence starting at 0")
        if not (0 <= int(self.truncated_at) < v.shape[0]):
            raise ModelError(f"truncated_at must index into the path, got {self.truncated_at}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "truncated_at", int(self.truncated_at))


def sample_walk(model: LevyModel, n_steps: int, index: int = 0, seed: int = 0) -> WalkPath:
    """Skeleton-1 walk with ``n_steps`` increments distributed as X_1."""
    inc = sample_increments(model, 1.0, int(n_steps), stream=STREAM_SKELETON * 4096 + int(index), seed=seed)
    return WalkPath(np.concatenate([[0.0], np.cumsum(inc)]), int(n_steps))


def _visit_tail(model: LevyModel, d: float) -> float:
    """Bound on the expected number of later visits below a level d under the current value."""
    best = math.inf
    for th in np.geomspace(1e-3, 1e3, 121):
        p = psi_neg(model, float(th))
        if p < 0:
            best = min(best, math.exp(-th * d + p) / -math.expm1(p))
    return best


def walk_functionals(path: WalkPath, r: float, model: Optional[LevyModel] = None,
                     budget: float = 1e-3) -> dict:
    """First passage index, visit count and last visit index of a truncated walk.

    The truncation is accepted when the walk ends above ``r`` and, if the
    driving ``model`` is given, when the Chernoff bound on the expected number
    of further visits is within ``budget``.
    """
    _check_r(r)
    v = path.values[: path.truncated_at + 1]
    below = np.flatnonzero(v <= r)
    above = np.flatnonzero(v > r)
    last = float(v[-1])
    if last <= r:
        raise HorizonOverflow(f"the walk ends at {last} <= r = {r}; later visits are not controlled")
    if model is not None:
        tail = _visit_tail(model, last - r)
        if tail > budget:
            raise HorizonOverflow(f"expected further visits are bounded only by {tail:.3g} > {budget:.3g}")
    return {"tau1": int(above[0]) if above.size else None,
            "n1": int(below.size),
            "rho1": int(below[-1]) if below.size else None}


# ---------------------------------------------------------------------------
# walk moment estimators
# ---------------------------------------------------------------------------

_WHICH = {"tau": 2, "n": 0, "rho": 1}


def _walk_estimate(P, skel, b, th, dbp, r, cfg, quantity, stream, prov):
    _set_workers(cfg)
    tau, vis, last, kn, kr, status = K.batch_walk(
        np.uint64(cfg.seed), stream, cfg.n_paths, float(r), P, bool(skel), float(b), th, dbp,
        math.log(cfg.epsilon_tail), _WHICH[quantity], MAX_WALK_STEPS)
    if int(np.sum(status)):
        raise HorizonOverflow(f"{int(np.sum(status))} walks exceeded {MAX_WALK_STEPS} steps")
    n = cfg.n_paths
    if quantity == "tau":
        vals, cert = np.exp(b * tau), 0.0
    elif quantity == "n":
        vals = np.exp(b * vis)
        cert = float(np.sum(vals * kn) / n)
    else:
        vals = np.exp(b * (last + 1))
        cert = float(np.sum(kr) / n)
    return _summarize(vals, cert, Mode.Direct, prov)


def estimate_jump_walk_moment(rate: float, law: JumpLaw, b: float, r: float, quantity: str,
                              cfg: PathConfig = PathConfig()) -> McEstimate:
    """E exp(b tau(r)), E exp(b n(r)) or E exp(b (rho(r) + 1)) on the walk of summed jumps."""
    if quantity not in _WHICH:
        raise ModelError(f"quantity must be one of {sorted(_WHICH)}, got {quantity!r}")
    if not b > 0:
        raise ModelError(f"b must be positive, got {b}")
    _check_r(r)
    cpp = LevyModel.compound_poisson(rate, law)
    a = -rate * math.expm1(-b)
    rep = check_finiteness(cpp, a)
    if rep.verdict_T is Verdict.Infinite:
        raise CriterionFails(f"walk moment of order b = {b} is infinite ({rep.governing_rule})")
    th, _ = _pairs(cpp, a, rep.R)
    dbp = np.array([-math.log(law.mgf(float(t))) - b for t in th])
    prov = _provenance(cpp, cfg, f"walk_{quantity}", b=b, r=r)
    stream = STREAM_WALK + 8 * _WHICH[quantity]
    return _walk_estimate(_pack(cpp), False, b, th, dbp, r, cfg, quantity, stream, prov)


def estimate_skeleton_moment(model: LevyModel, a: float, r: float, quantity: str,
                             cfg: PathConfig = PathConfig()) -> McEstimate:
    """E exp(a T^1_r), E exp(a N^1_r) or E exp(a (rho^1_r + 1)) on the skeleton-1 walk."""
    if quantity not in _WHICH:
        raise ModelError(f"quantity must be one of {sorted(_WHICH)}, got {quantity!r}")
    _check_a(a)
    _check_r(r)
    if model.is_stable:
        raise Unsupported("skeleton-walk estimators do not cover the stable subordinator")
    rep = check_finiteness(model, a)
    if rep.verdict_T is Verdict.Infinite:
        raise CriterionFails(f"skeleton moment of order a = {a} is infinite ({rep.governing_rule})")
    th, dl = _pairs(model, a, rep.R)
    prov = _provenance(model, cfg, f"skeleton_{quantity}", a=a, r=r)
    stream = STREAM_SKELETON + 8 * _WHICH[quantity]
    return _walk_estimate(_pack(model), True, a, th, dl, r, cfg, quantity, stream, prov)


# ---------------------------------------------------------------------------
# continuous passage against the integer-time passage on one path
# ---------------------------------------------------------------------------

def joint_passage(model: LevyModel, r: float, n_paths: int, seed: int = 0, max_time: float = 1e6):
    """Joint samples of (T_r, T^1_r) from the same path, for models without a Gaussian part.

    The path is simulated exactly between jumps, so ``T_r`` is exact and
    ``T^1_r`` is the first integer time at which the path is above ``r``.
    """
    if model.gaussian_var > 0 or model.is_stable:
        raise Unsupported("joint passage sampling covers models without a Gaussian part")
    _check_r(r)
    rng = np.random.default_rng([seed, STREAM_JOINT])
    mu, lam = model.drift, model.jump_rate
    P = _pack(model)
    T = np.empty(n_paths)
    T1 = np.empty(n_paths)
    if r < 0:
        return np.zeros(n_paths), np.zeros(n_paths)
    for i in range(n_paths):
        x, t, tp = 0.0, 0.0, math.inf
        k = 1
        while True:
            e = rng.exponential(1.0 / lam) if lam > 0 else math.inf
            # integer times inside (t, t + e]: X there is x + mu (k - t)
            while k <= t + e:
                xk = x + mu * (k - t)
                if math.isinf(tp) and mu > 0 and x <= r < xk:
                    tp = t + (r - x) / mu
                if xk > r:
                    T1[i] = k
                    break
                k += 1
            else:
                if math.isinf(tp) and mu > 0 and x <= r < x + mu * e:
                    tp = t + (r - x) / mu
                x += mu * e
                t += e
                x += _draw_jump(rng, P)
                if math.isinf(tp) and x > r:
                    tp = t
                if t > max_time:
                    raise HorizonOverflow(f"no passage of {r} before time {max_time}")
                continue
            break
        T[i] = tp
    return T, T1


def _draw_jump(rng, P):
    kind = int(P[3])
    if kind == 1:
        return P[5] * P[4] * rng.exponential()
    if kind == 2:
        return P[4] if rng.random() < P[5] else P[6]
    return P[6] + P[5] * P[4] * rng.exponential()


# ---------------------------------------------------------------------------
# compound Poisson bridge
# ---------------------------------------------------------------------------

def verify_cpp_bridge(lam: float, jump_law: JumpLaw, a: float, r: float,
                      cfg: PathConfig = PathConfig()) -> dict:
    """Compare continuous-time moments with jump-walk moments for T, N and rho.

    Both sides come from independent simulations.  A pair is compatible when
    the means differ by at most three combined standard errors plus the two
    truncation certificates.
    """
    b = cpp_bridge(lam, a)
    model = LevyModel.compound_poisson(lam, jump_law)
    pairs = {}
    for q, cont, walk in (("T", estimate_moment_T, "tau"), ("N", estimate_moment_N, "n"),
                          ("rho", estimate_moment_rho, "rho")):
        lhs = cont(model, a, r, cfg)
        rhs = estimate_jump_walk_moment(lam, jump_law, b, r, walk, cfg)
        gap = abs(lhs.mean - rhs.mean)
        tol = 3.0 * math.hypot(lhs.std_err, rhs.std_err) + lhs.truncation_cert + rhs.truncation_cert
        pairs[q] = {"lhs": lhs, "rhs": rhs, "compatible": bool(gap <= tol)}
    return {"b": b, "lhs": pairs["T"]["lhs"], "rhs": pairs["T"]["rhs"],
            "compatible": all(p["compatible"] for p in pairs.values()), "pairs": pairs}


def bridge_to_dict(res: dict) -> dict:
    return {"b": res["b"], "compatible": res["compatible"],
            "pairs": {q: {"lhs": p["lhs"].to_dict(), "rhs": p["rhs"].to_dict(), "compatible": p["compatible"]}
                      for q, p in res["pairs"].items()}}
