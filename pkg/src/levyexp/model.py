"""Parametric Lévy models, their Laplace exponent and classification.

Models are stored in "no-truncation" coordinates: ``drift`` is the actual
drift of the continuous part, and jumps arrive at rate ``jump_rate`` with law
``jump_law``.  With that convention

    Psi(-theta) = -theta*drift + gaussian_var*theta**2/2 + rate*(M(theta) - 1),

where ``M(theta) = E[exp(-theta*Y)]`` for a single jump ``Y``.  The one-sided
alpha-stable subordinator contributes ``-theta**alpha`` instead of the jump
term.  ``phi(theta) = exp(Psi(-theta))`` is the Laplace transform of X_1.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import ModelError

INF = math.inf


class Family(str, enum.Enum):
    BrownianDrift = "BrownianDrift"
    CompoundPoisson = "CompoundPoisson"
    JumpDiffusion = "JumpDiffusion"
    StableSubordinator = "StableSubordinator"


def _finite(name, value):
    if value is None or not isinstance(value, (int, float)) or math.isnan(value) or math.isinf(value):
        raise ModelError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class Exponential:
    """Jump ``sign * E`` with ``E`` exponential of the given mean."""

    mean: float
    sign: int = 1

    def __post_init__(self):
        _finite("mean", self.mean)
        if self.mean <= 0:
            raise ModelError(f"Exponential mean must be positive, got {self.mean}")
        if self.sign not in (1, -1):
            raise ModelError(f"Exponential sign must be +1 or -1, got {self.sign}")

    def theta_edge(self) -> float:
        # E[exp(-theta*Y)] < inf  <=>  1 + sign*theta*mean > 0
        return INF if self.sign > 0 else 1.0 / self.mean

    def theta_low(self) -> float:
        return -1.0 / self.mean if self.sign > 0 else -INF

    def mgf(self, theta: float) -> float:
        den = 1.0 + self.sign * theta * self.mean
        return 1.0 / den if den > 0 else INF

    def mgf_dx(self, theta: float) -> float:
        """E[Y exp(-theta*Y)]."""
        den = 1.0 + self.sign * theta * self.mean
        return self.sign * self.mean / den**2 if den > 0 else -self.sign * INF

    def first_moment(self) -> float:
        return self.sign * self.mean

    def has_positive(self) -> bool:
        return self.sign > 0

    def has_negative(self) -> bool:
        return self.sign < 0

    def tilt(self, gamma: float) -> "Exponential":
        return Exponential(self.mean / (1.0 + self.sign * gamma * self.mean), self.sign)

    def to_dict(self) -> dict:
        return {"kind": "Exponential", "mean": self.mean, "sign": self.sign}


@dataclass(frozen=True)
class TwoPointMass:
    """Jump equal to ``x_neg`` with probability ``p_neg`` and ``x_pos`` with ``p_pos``."""

    x_neg: float
    p_neg: float
    x_pos: float
    p_pos: float

    def __post_init__(self):
        for name in ("x_neg", "p_neg", "x_pos", "p_pos"):
            _finite(name, getattr(self, name))
        if self.p_neg < 0 or self.p_pos < 0:
            raise ModelError("TwoPointMass probabilities must be nonnegative")
        if abs(self.p_neg + self.p_pos - 1.0) > 1e-12:
            raise ModelError(f"TwoPointMass probabilities must sum to 1, got {self.p_neg + self.p_pos}")
        if self.x_neg > self.x_pos:
            raise ModelError("TwoPointMass requires x_neg <= x_pos")

    def _atoms(self):
        return [(x, p) for x, p in ((self.x_neg, self.p_neg), (self.x_pos, self.p_pos)) if p > 0]

    def theta_edge(self) -> float:
        return INF

    def theta_low(self) -> float:
        return -INF

    def mgf(self, theta: float) -> float:
        return sum(p * math.exp(-theta * x) for x, p in self._atoms())

    def mgf_dx(self, theta: float) -> float:
        return sum(p * x * math.exp(-theta * x) for x, p in self._atoms())

    def first_moment(self) -> float:
        return sum(p * x for x, p in self._atoms())

    def zero_mass(self) -> float:
        return sum(p for x, p in self._atoms() if x == 0.0)

    def has_positive(self) -> bool:
        return any(x > 0 for x, _ in self._atoms())

    def has_negative(self) -> bool:
        return any(x < 0 for x, _ in self._atoms())

    def tilt(self, gamma: float) -> "TwoPointMass":
        w_neg = self.p_neg * math.exp(-gamma * self.x_neg)
        w_pos = self.p_pos * math.exp(-gamma * self.x_pos)
        tot = w_neg + w_pos
        return TwoPointMass(self.x_neg, w_neg / tot, self.x_pos, w_pos / tot)

    def to_dict(self) -> dict:
        return {"kind": "TwoPointMass", "x_neg": self.x_neg, "p_neg": self.p_neg,
                "x_pos": self.x_pos, "p_pos": self.p_pos}


@dataclass(frozen=True)
class ShiftedExponential:
    """Jump ``loc + sign * E`` with ``E`` exponential of the given mean."""

    loc: float
    mean: float
    sign: int = 1

    def __post_init__(self):
        _finite("loc", self.loc)
        _finite("mean", self.mean)
        if self.mean <= 0:
            raise ModelError(f"ShiftedExponential mean must be positive, got {self.mean}")
        if self.sign not in (1, -1):
            raise ModelError(f"ShiftedExponential sign must be +1 or -1, got {self.sign}")

    def theta_edge(self) -> float:
        return INF if self.sign > 0 else 1.0 / self.mean

    def theta_low(self) -> float:
        return -1.0 / self.mean if self.sign > 0 else -INF

    def mgf(self, theta: float) -> float:
        den = 1.0 + self.sign * theta * self.mean
        return math.exp(-theta * self.loc) / den if den > 0 else INF

    def mgf_dx(self, theta: float) -> float:
        den = 1.0 + self.sign * theta * self.mean
        if den <= 0:
            return -self.sign * INF
        return math.exp(-theta * self.loc) * (self.loc / den + self.sign * self.mean / den**2)

    def first_moment(self) -> float:
        return self.loc + self.sign * self.mean

    def has_positive(self) -> bool:
        return self.sign > 0 or self.loc > 0

    def has_negative(self) -> bool:
        return self.sign < 0 or self.loc < 0

    def tilt(self, gamma: float) -> "ShiftedExponential":
        return ShiftedExponential(self.loc, self.mean / (1.0 + self.sign * gamma * self.mean), self.sign)

    def to_dict(self) -> dict:
        return {"kind": "ShiftedExponential", "loc": self.loc, "mean": self.mean, "sign": self.sign}


JumpLaw = Union[Exponential, TwoPointMass, ShiftedExponential]

_JUMP_KINDS = {"Exponential": Exponential, "TwoPointMass": TwoPointMass,
               "ShiftedExponential": ShiftedExponential}


@dataclass(frozen=True)
class LevyModel:
    """A Lévy process from one of four parametric families.

    Use the named constructors (:meth:`brownian`, :meth:`compound_poisson`,
    :meth:`jump_diffusion`, :meth:`stable_subordinator`) rather than the raw
    initializer.
    """

    family: Family
    drift: float = 0.0
    gaussian_var: float = 0.0
    jump_rate: float = 0.0
    jump_law: Optional[JumpLaw] = None
    stable_index: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "drift", _finite("drift", self.drift))
        object.__setattr__(self, "gaussian_var", _finite("gaussian_var", self.gaussian_var))
        object.__setattr__(self, "jump_rate", _finite("jump_rate", self.jump_rate))
        if self.gaussian_var < 0:
            raise ModelError("gaussian_var must be nonnegative")
        if self.jump_rate < 0:
            raise ModelError("jump_rate must be nonnegative")
        if self.jump_rate > 0 and self.jump_law is None:
            raise ModelError("a positive jump_rate needs a jump_law")
        fam = self.family
        if fam is Family.BrownianDrift:
            if self.jump_rate != 0 or self.jump_law is not None:
                raise ModelError("BrownianDrift has no jumps")
        elif fam is Family.CompoundPoisson:
            if self.gaussian_var != 0:
                raise ModelError("CompoundPoisson has no Gaussian part")
            if self.jump_rate <= 0:
                raise ModelError("CompoundPoisson needs jump_rate > 0")
        elif fam is Family.StableSubordinator:
            a = self.stable_index
            if a is None or isinstance(a, bool) or not (0.0 < float(a) < 1.0):
                raise ModelError(f"stable_index must lie in (0, 1), got {a!r}")
            object.__setattr__(self, "stable_index", float(a))
            if self.gaussian_var != 0 or self.jump_rate != 0 or self.jump_law is not None:
                raise ModelError("StableSubordinator has no Gaussian part and no extra jumps")
            if self.drift < 0:
                raise ModelError("StableSubordinator needs drift >= 0")
        if fam is not Family.StableSubordinator and self.stable_index is not None:
            raise ModelError("stable_index is only meaningful for StableSubordinator")

    # -- constructors -----------------------------------------------------
    @classmethod
    def brownian(cls, mu: float, sigma2: float = 1.0) -> "LevyModel":
        return cls(Family.BrownianDrift, drift=mu, gaussian_var=sigma2)

    @classmethod
    def compound_poisson(cls, rate: float, law: JumpLaw, drift: float = 0.0) -> "LevyModel":
        return cls(Family.CompoundPoisson, drift=drift, jump_rate=rate, jump_law=law)

    @classmethod
    def jump_diffusion(cls, mu: float, sigma2: float, rate: float, law: JumpLaw) -> "LevyModel":
        return cls(Family.JumpDiffusion, drift=mu, gaussian_var=sigma2, jump_rate=rate, jump_law=law)

    @classmethod
    def stable_subordinator(cls, alpha: float, drift: float = 0.0) -> "LevyModel":
        return cls(Family.StableSubordinator, drift=drift, stable_index=alpha)

    # -- derived properties -------------------------------------------------
    @property
    def has_jumps(self) -> bool:
        return self.jump_rate > 0

    @property
    def is_stable(self) -> bool:
        return self.family is Family.StableSubordinator

    def theta_edge(self) -> float:
        """Supremum of the (open) finiteness domain of phi on [0, inf)."""
        if self.has_jumps:
            return self.jump_law.theta_edge()
        return INF

    def theta_low(self) -> float:
        """Infimum of the finiteness domain of theta -> E[exp(-theta X_1)] on the negative axis."""
        if self.is_stable:
            return 0.0
        if self.has_jumps:
            return self.jump_law.theta_low()
        return -INF

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "drift": self.drift,
            "gaussian_var": self.gaussian_var,
            "jump_rate": self.jump_rate,
            "jump_law": None if self.jump_law is None else self.jump_law.to_dict(),
            "stable_index": self.stable_index,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "LevyModel":
        if not isinstance(doc, dict):
            raise ModelError("model document must be a JSON object")
        unknown = set(doc) - {"family", "drift", "gaussian_var", "jump_rate", "jump_law", "stable_index"}
        if unknown:
            raise ModelError(f"unknown model fields: {sorted(unknown)}")
        if "family" not in doc:
            raise ModelError("model document needs a 'family' field")
        try:
            family = Family(doc["family"])
        except ValueError:
            raise ModelError(f"unknown family {doc['family']!r}") from None
        law = doc.get("jump_law")
        if law is not None:
            if not isinstance(law, dict) or law.get("kind") not in _JUMP_KINDS:
                raise ModelError(f"jump_law needs 'kind' in {sorted(_JUMP_KINDS)}")
            fields = {k: v for k, v in law.items() if k != "kind"}
            try:
                law = _JUMP_KINDS[law["kind"]](**fields)
            except TypeError as exc:
                raise ModelError(f"bad jump_law fields: {exc}") from None
        return cls(family, drift=doc.get("drift", 0.0), gaussian_var=doc.get("gaussian_var", 0.0),
                   jump_rate=doc.get("jump_rate", 0.0), jump_law=law,
                   stable_index=doc.get("stable_index"))

    @classmethod
    def from_json(cls, text: str) -> "LevyModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"model is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def digest(self) -> str:
        """Short stable hash of the canonical JSON form."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class LaplaceReport:
    theta: float
    psi_neg: float
    phi: float
    finite: bool


@dataclass(frozen=True)
class Classification:
    is_subordinator: bool
    is_compound_poisson: bool
    is_spectrally_negative: bool
    is_lattice: bool
    p_neg_positive: bool


def psi_neg(model: LevyModel, theta: float) -> float:
    """Psi(-theta) = log E[exp(-theta X_1)] for any real theta; +inf outside the domain."""
    if model.is_stable:
        if theta < 0:
            return INF
        return -theta * model.drift - theta ** model.stable_index
    val = -theta * model.drift + 0.5 * model.gaussian_var * theta * theta
    if model.has_jumps:
        m = model.jump_law.mgf(theta)
        if math.isinf(m):
            return INF
        val += model.jump_rate * (m - 1.0)
    return val


def dpsi_neg(model: LevyModel, theta: float) -> float:
    """d/dtheta Psi(-theta), i.e. -E[X_1 e^{-theta X_1}] / phi(theta)."""
    if model.is_stable:
        if theta <= 0:
            return -INF
        a = model.stable_index
        return -model.drift - a * theta ** (a - 1.0)
    val = -model.drift + model.gaussian_var * theta
    if model.has_jumps:
        val -= model.jump_rate * model.jump_law.mgf_dx(theta)
    return val


def laplace_exponent(model: LevyModel, theta: float) -> LaplaceReport:
    """Evaluate Psi(-theta) and phi(theta) for theta >= 0."""
    if theta is None or math.isnan(theta):
        raise ModelError("theta must be a number")
    if theta < 0:
        raise ModelError(f"theta must be >= 0, got {theta}")
    p = psi_neg(model, float(theta))
    if math.isinf(p):
        return LaplaceReport(float(theta), INF, INF, False)
    return LaplaceReport(float(theta), p, math.exp(p), True)


def _lattice_atoms(xs, tol=1e-12) -> bool:
    xs = [x for x in xs if x != 0.0]
    if not xs:
        return True
    base = abs(xs[0])
    for x in xs[1:]:
        ratio = Fraction(x / base).limit_denominator(10**6)
        if abs(float(ratio) - x / base) > tol * max(1.0, abs(x / base)):
            return False
    return True


def classify(model: LevyModel) -> Classification:
    law = model.jump_law if model.has_jumps else None
    pos_jumps = model.is_stable or (law is not None and law.has_positive())
    neg_jumps = law is not None and law.has_negative()
    is_sub = model.gaussian_var == 0 and not neg_jumps and model.drift >= 0
    is_cp = (not model.is_stable and model.has_jumps and model.drift == 0 and model.gaussian_var == 0)
    is_sn = not pos_jumps and not is_sub
    is_lat = False
    if is_cp and isinstance(law, TwoPointMass):
        is_lat = _lattice_atoms([x for x, _ in law._atoms()])
    degenerate = (model.drift == 0 and model.gaussian_var == 0 and not model.has_jumps
                  and not model.is_stable)
    return Classification(
        is_subordinator=is_sub,
        is_compound_poisson=is_cp,
        is_spectrally_negative=is_sn,
        is_lattice=is_lat,
        p_neg_positive=not is_sub and not degenerate,
    )


def is_degenerate(model: LevyModel) -> bool:
    """X == 0 identically."""
    if model.is_stable:
        return False
    zero_jumps = not model.has_jumps or (
        isinstance(model.jump_law, TwoPointMass) and model.jump_law.zero_mass() == 1.0)
    return model.drift == 0 and model.gaussian_var == 0 and zero_jumps


def mean(model: LevyModel) -> float:
    """E[X_1]; +inf for the stable subordinator."""
    if model.is_stable:
        return INF
    m = model.drift
    if model.has_jumps:
        m += model.jump_rate * model.jump_law.first_moment()
    return m
