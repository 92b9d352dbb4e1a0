"""Euclidean group model of the space of perceived colors.

Three carriers, all componentwise:

* ``UnitRgb`` in (0, 1)^3 with the induced operation ``a * b = exp(-(ln a)(ln b))``
  and identity (1/e, 1/e, 1/e);
* ``PositiveTriple`` in (R+)^3 under multiplication, identity (1, 1, 1);
* ``EuclideanTriple`` in R^3 under addition, identity 0.

``h_map`` (u -> -ln u) and ``loglog_map`` (u -> ln(-ln u)) are the group
isomorphisms between them. Means are compared in the additive coordinates,
where equality of means becomes a zero difference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .colorimetry import (
    SpectralDistribution,
    Tristimulus,
    UnitRgb,
    clamp_open_unit,
    trapezoid_product,
)
from .errors import DomainError

__all__ = [
    "IDENTITY_POSITIVE",
    "IDENTITY_UNIT",
    "ActivationVector",
    "AxiomReport",
    "AxiomVerdict",
    "ConeSensitivities",
    "EuclideanTriple",
    "PositiveTriple",
    "activation_coefficients",
    "check_axioms",
    "clamp_open_unit",
    "difference_coordinates",
    "group_act",
    "group_difference",
    "group_inverse",
    "h_inverse",
    "h_map",
    "induced_inverse",
    "induced_op",
    "is_metameric",
    "loglog_array",
    "loglog_inverse",
    "loglog_map",
    "metameric_perturbation",
    "neglog_array",
]

#: The multiplicative group carrier is the tristimulus octant itself.
PositiveTriple = Tristimulus

IDENTITY_POSITIVE = PositiveTriple(1.0, 1.0, 1.0)
IDENTITY_UNIT = UnitRgb(math.exp(-1), math.exp(-1), math.exp(-1))


@dataclass(frozen=True)
class EuclideanTriple:
    """Point of the additive group (R^3, +)."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        for name in ("p", "q", "r"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.q, self.r])

    def __add__(self, other: EuclideanTriple) -> EuclideanTriple:
        return EuclideanTriple(*(self.as_array() + other.as_array()))

    def __iter__(self):
        return iter((self.p, self.q, self.r))


# ---------------------------------------------------------------------------
# Isomorphisms
# ---------------------------------------------------------------------------


def neglog_array(u):
    """Componentwise ``-ln u`` on an array of values in (0, 1)."""
    return -np.log(u)


def loglog_array(u):
    """Componentwise ``ln(-ln u)`` on an array of values in (0, 1)."""
    return np.log(-np.log(u))


def h_map(c: UnitRgb) -> PositiveTriple:
    """(u, v, w) -> (-ln u, -ln v, -ln w)."""
    return PositiveTriple(*neglog_array(c.as_array()))


def h_inverse(t: PositiveTriple) -> UnitRgb:
    return UnitRgb(*np.exp(-t.as_array()))


def loglog_map(c: UnitRgb) -> EuclideanTriple:
    """(u, v, w) -> ln(-ln .) componentwise; sends (1/e, 1/e, 1/e) to 0."""
    return EuclideanTriple(*loglog_array(c.as_array()))


def loglog_inverse(t: EuclideanTriple) -> UnitRgb:
    return UnitRgb(*np.exp(-np.exp(t.as_array())))


def induced_op(a: UnitRgb, b: UnitRgb) -> UnitRgb:
    """Group operation on (0, 1)^3 carried over from (R^3, +) by ``loglog_map``."""
    return UnitRgb(*np.exp(-np.log(a.as_array()) * np.log(b.as_array())))


def induced_inverse(a: UnitRgb) -> UnitRgb:
    return UnitRgb(*np.exp(1.0 / np.log(a.as_array())))


# ---------------------------------------------------------------------------
# Multiplicative group and its action on itself
# ---------------------------------------------------------------------------


def group_act(g: PositiveTriple, x: PositiveTriple) -> PositiveTriple:
    return PositiveTriple(*(g.as_array() * x.as_array()))


def group_inverse(g: PositiveTriple) -> PositiveTriple:
    return PositiveTriple(*(1.0 / g.as_array()))


def group_difference(m1: PositiveTriple, m2: PositiveTriple) -> PositiveTriple:
    """The unique ``g`` with ``group_act(g, m1) == m2``.

    Equal means correspond exactly to ``g == (1, 1, 1)``.
    """
    return PositiveTriple(*(m2.as_array() / m1.as_array()))


def difference_coordinates(m1: PositiveTriple, m2: PositiveTriple) -> EuclideanTriple:
    """``group_difference`` expressed in additive coordinates (its log).

    Zero iff ``m1 == m2``. For ``m = h_map(c)`` this equals
    ``loglog_map(c2) - loglog_map(c1)``.
    """
    return EuclideanTriple(*np.log(group_difference(m1, m2).as_array()))


# ---------------------------------------------------------------------------
# Cone activations and metamerism
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConeSensitivities:
    s1: SpectralDistribution
    s2: SpectralDistribution
    s3: SpectralDistribution

    def __post_init__(self):
        grid = self.s1.wavelengths
        for s in (self.s2, self.s3):
            if not np.array_equal(s.wavelengths, grid):
                raise DomainError("cone sensitivities must share one wavelength grid")

    @property
    def wavelengths(self) -> np.ndarray:
        return self.s1.wavelengths

    @property
    def channels(self) -> tuple[SpectralDistribution, ...]:
        return (self.s1, self.s2, self.s3)

    @classmethod
    def from_arrays(cls, wavelengths, s1, s2, s3) -> ConeSensitivities:
        return cls(*(SpectralDistribution(wavelengths, s) for s in (s1, s2, s3)))


@dataclass(frozen=True)
class ActivationVector:
    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"activation {name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3])


def activation_coefficients(x: SpectralDistribution, s: ConeSensitivities) -> ActivationVector:
    """Cone activations: the integral of each sensitivity times ``x``."""
    # nonnegative integrands; clip rounding residue of metameric constructions
    return ActivationVector(*(max(trapezoid_product(x, si), 0.0) for si in s.channels))


def is_metameric(
    x: SpectralDistribution, y: SpectralDistribution, s: ConeSensitivities, tol: float = 1e-9
) -> bool:
    """True when all three activations agree to ``tol * max(1, |alpha_i(x)|)``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    ax = activation_coefficients(x, s).as_array()
    ay = activation_coefficients(y, s).as_array()
    return bool(np.all(np.abs(ax - ay) <= tol * np.maximum(1.0, np.abs(ax))))


def metameric_perturbation(s: ConeSensitivities, direction) -> np.ndarray:
    """Project ``direction`` (sampled on ``s.wavelengths``) onto the
    complement of the sensitivities under the trapezoid inner product.

    Adding the result to a spectrum on the same grid leaves every activation
    unchanged, provided the sum stays nonnegative.
    """
    wl = s.wavelengths
    direction = np.asarray(direction, dtype=float)
    if direction.shape != wl.shape:
        raise DomainError("direction must be sampled on the sensitivity grid")
    weights = np.empty_like(wl)
    dx = np.diff(wl)
    weights[0], weights[-1] = dx[0] / 2, dx[-1] / 2
    weights[1:-1] = (dx[:-1] + dx[1:]) / 2
    a = np.stack([ch.values for ch in s.channels]) * weights
    coef, *_ = np.linalg.lstsq(a @ a.T, a @ direction, rcond=None)
    delta = direction - a.T @ coef
    # one refinement pass removes most of the residual left by lstsq
    coef, *_ = np.linalg.lstsq(a @ a.T, a @ delta, rcond=None)
    return delta - a.T @ coef


# ---------------------------------------------------------------------------
# Executable axiom checks on the model
# ---------------------------------------------------------------------------


@dataclass
class AxiomVerdict:
    number: int
    name: str
    passed: bool
    checked: int
    counterexample: str | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"axiom {self.number} [{status}] {self.name}: {self.checked} checks"
        if self.counterexample:
            text += f"; counterexample {self.counterexample}"
        return text


@dataclass
class AxiomReport:
    verdicts: list[AxiomVerdict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def lines(self) -> list[str]:
        return [v.line() for v in self.verdicts]


def _fmt(a) -> str:
    return "(" + ", ".join(f"{float(c):.10g}" for c in np.ravel(a)) + ")"


def _in_cone(a) -> bool:
    a = np.asarray(a)
    return bool(np.all(np.isfinite(a)) and np.all(a > 0))


def check_axioms(sample, scalars, atol: float = 1e-12) -> AxiomReport:
    """Check the perceived-color axioms on the model (R+)^3.

    Scalar action is ``alpha * x``, superposition is componentwise addition,
    background change is the multiplicative action. Axiom 4 (dimension at most
    three) is checked as linear dependence of every 4-subset of the sample,
    capped at 500 subsets.
    """
    pts = [np.asarray(t.as_array() if hasattr(t, "as_array") else t, dtype=float) for t in sample]
    alphas = [float(a) for a in scalars]
    if not pts or not alphas:
        raise DomainError("check_axioms needs a nonempty sample and scalar list")
    for i, p in enumerate(pts):
        if p.shape != (3,) or not _in_cone(p):
            raise DomainError(f"sample point {i} {_fmt(p)} is not in (R+)^3")
    if any(not (a > 0 and math.isfinite(a)) for a in alphas):
        raise DomainError("scalars must be positive reals")

    report = AxiomReport()

    # 1: closure under positive scaling
    bad, n = None, 0
    for p, a in itertools.product(pts, alphas):
        n += 1
        if bad is None and not _in_cone(a * p):
            bad = f"{a:g} * {_fmt(p)}"
    report.verdicts.append(AxiomVerdict(1, "closure under scalar action", bad is None, n, bad))

    # 2: no additive inverse; x + y stays strictly positive, never 0
    bad, n = None, 0
    for p, q in itertools.product(pts, repeat=2):
        n += 1
        s = p + q
        if bad is None and (not _in_cone(s) or np.any(s <= p) or np.any(s <= q)):
            bad = f"{_fmt(p)} + {_fmt(q)}"
    for p in pts:
        n += 1
        try:
            PositiveTriple(*(-p))
        except DomainError:
            continue
        bad = bad or f"inverse of {_fmt(p)} accepted"
    report.verdicts.append(AxiomVerdict(2, "no additive inverses", bad is None, n, bad))

    # 3: convexity
    weights = sorted({0.0, 1.0, *(a / (1.0 + a) for a in alphas)})
    bad, n = None, 0
    for p, q in itertools.combinations(pts, 2):
        for t in weights:
            n += 1
            if bad is None and not _in_cone(t * p + (1 - t) * q):
                bad = f"{t:g}*{_fmt(p)} + {1 - t:g}*{_fmt(q)}"
    report.verdicts.append(AxiomVerdict(3, "convexity", bad is None, n, bad))

    # 4: any four points are linearly dependent (dimension <= 3)
    bad, n = None, 0
    for quad in itertools.islice(itertools.combinations(range(len(pts)), 4), 500):
        n += 1
        m = np.stack([pts[i] for i in quad], axis=1)  # 3 x 4
        null = np.linalg.svd(m)[2][-1]
        resid = np.abs(m @ null).max()
        if bad is None and resid > 1e-9 * np.abs(m).max():
            bad = f"points {quad} independent (residual {resid:.3g})"
    report.verdicts.append(AxiomVerdict(4, "dimension at most three", bad is None, n, bad))

    # 5: the multiplicative action is transitive; group_difference witnesses it
    bad, n = None, 0
    for p, q in itertools.product(pts, repeat=2):
        n += 1
        x, y = PositiveTriple(*p), PositiveTriple(*q)
        moved = group_act(group_difference(x, y), x).as_array()
        if bad is None and np.any(np.abs(moved - q) > atol * np.maximum(1.0, np.abs(q))):
            bad = f"g{_fmt(p)} = {_fmt(moved)} != {_fmt(q)}"
    report.verdicts.append(AxiomVerdict(5, "homogeneity (transitive action)", bad is None, n, bad))

    return report
