"""Two-sample Hotelling T^2 tests on groups of mean-color vectors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .colorimetry import DEFAULT_EPS, clamp_open_unit
from .errors import DomainError, InsufficientSampleError, SingularCovarianceError
from .perceptual import loglog_array, neglog_array

__all__ = [
    "TRANSFORMS",
    "PairwiseMatrix",
    "SampleGroup",
    "T2Result",
    "apply_transform",
    "covariance",
    "f_upper_tail",
    "hotelling_t2",
    "mean_vector",
    "pairwise_t2",
    "read_matrix_csv",
    "write_matrix_csv",
]

TRANSFORMS = ("none", "h", "loglog")


@dataclass(frozen=True, eq=False)
class SampleGroup:
    """Labelled observations, one row per image.

    Rows are usually 3-vectors (mean R, G, B); any fixed dimension is
    accepted so that the test also covers the univariate case.
    """

    label: str
    observations: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] < 1 or obs.shape[1] < 1:
            raise DomainError(f"group {self.label!r}: observations must be an (n, p) array")
        if not np.all(np.isfinite(obs)):
            raise DomainError(f"group {self.label!r}: non-finite observation")
        obs.flags.writeable = False
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def dim(self) -> int:
        return self.observations.shape[1]

    def map(self, fn) -> SampleGroup:
        return SampleGroup(self.label, fn(self.observations))


@dataclass(frozen=True)
class T2Result:
    t2: float
    n1: int
    n2: int
    p: int
    f_stat: float
    p_value: float
    singular_fallback: bool = False

    @property
    def df(self) -> tuple[int, int]:
        return self.p, self.n1 + self.n2 - self.p - 1


@dataclass
class PairwiseMatrix:
    labels: list[str]
    t2: np.ndarray
    p_values: np.ndarray
    transform: str = "none"
    failures: dict[tuple[int, int], str] = field(default_factory=dict)
    fallbacks: int = 0


def mean_vector(g: SampleGroup) -> np.ndarray:
    return g.observations.mean(axis=0)


def covariance(g: SampleGroup) -> np.ndarray:
    """Unbiased (divisor n - 1) sample covariance."""
    if g.n < 2:
        raise InsufficientSampleError(f"group {g.label!r}: covariance needs n >= 2, got {g.n}")
    c = g.observations - mean_vector(g)
    return c.T @ c / (g.n - 1)


def f_upper_tail(f: float, d1: int, d2: int) -> float:
    """P(F > f) for F ~ F(d1, d2), through the regularized incomplete beta."""
    if d1 <= 0 or d2 <= 0:
        raise DomainError(f"degrees of freedom must be positive, got ({d1}, {d2})")
    if f < 0 or math.isnan(f):
        raise DomainError(f"F statistic must be >= 0, got {f!r}")
    if math.isinf(f):
        return 0.0
    return float(betainc(d2 / 2, d1 / 2, d2 / (d2 + d1 * f)))


def _singular(s: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(s)
    return eig[-1] <= 0 or eig[0] <= s.shape[0] * np.finfo(float).eps * eig[-1]


def hotelling_t2(g1: SampleGroup, g2: SampleGroup, fallback: bool = False) -> T2Result:
    """Two-sample Hotelling T^2 with pooled covariance.

    Parameters
    ----------
    g1, g2 : SampleGroup
        Groups of equal dimension ``p``, each with at least two rows.
    fallback : bool
        When the pooled covariance is singular, add ``lambda * I`` with
        ``lambda = 1e-8 * trace(S) / p`` instead of raising. The result is
        flagged with ``singular_fallback``.

    Returns
    -------
    T2Result
        ``f_stat = t2 * (n1 + n2 - p - 1) / ((n1 + n2 - 2) * p)``, referred to
        F(p, n1 + n2 - p - 1).

    Raises
    ------
    InsufficientSampleError
        A group has fewer than two rows, or ``n1 + n2 - p - 1 <= 0``.
    SingularCovarianceError
        Pooled covariance not invertible and ``fallback`` is off.
    """
    if g1.dim != g2.dim:
        raise DomainError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    n1, n2, p = g1.n, g2.n, g1.dim
    s1, s2 = covariance(g1), covariance(g2)
    df2 = n1 + n2 - p - 1
    if df2 <= 0:
        raise InsufficientSampleError(
            f"n1 + n2 - p - 1 = {df2}: need more observations than dimensions"
        )
    d = mean_vector(g2) - mean_vector(g1)
    if not np.any(d):
        # zero quadratic form for any (generalized) inverse
        return T2Result(0.0, n1, n2, p, 0.0, 1.0)

    pooled = ((n1 - 1) * s1 + (n2 - 1) * s2) / (n1 + n2 - 2)
    used_fallback = False
    if _singular(pooled):
        ridge = 1e-8 * np.trace(pooled) / p
        if not fallback or ridge <= 0:
            raise SingularCovarianceError(
                f"pooled covariance of {g1.label!r} and {g2.label!r} is singular"
            )
        pooled = pooled + ridge * np.eye(p)
        used_fallback = True

    t2 = n1 * n2 / (n1 + n2) * float(d @ np.linalg.solve(pooled, d))
    t2 = max(t2, 0.0)
    f_stat = t2 * df2 / ((n1 + n2 - 2) * p)
    return T2Result(t2, n1, n2, p, f_stat, f_upper_tail(f_stat, p, df2), used_fallback)


def apply_transform(obs: np.ndarray, transform: str, scale: float = 255.0, eps: float = DEFAULT_EPS):
    """Map raw channel means to the coordinates used for testing.

    ``none`` leaves values untouched. ``h`` and ``loglog`` first scale by
    ``1/scale`` and clamp into the open unit interval, then apply ``-ln`` or
    ``ln(-ln)`` per channel.
    """
    if transform == "none":
        return np.asarray(obs, dtype=float)
    if transform not in TRANSFORMS:
        raise DomainError(f"unknown transform {transform!r}; choose from {', '.join(TRANSFORMS)}")
    unit = clamp_open_unit(np.asarray(obs, dtype=float) / scale, eps)
    return neglog_array(unit) if transform == "h" else loglog_array(unit)


def pairwise_t2(
    groups,
    transform: str = "none",
    fallback: bool = False,
    scale: float = 255.0,
    eps: float = DEFAULT_EPS,
) -> PairwiseMatrix:
    """Hotelling T^2 for every pair of groups.

    Cells that fail (singular covariance, too few rows) hold NaN and the
    reason is kept in ``failures``; the rest of the matrix is still filled.
    """
    groups = list(groups)
    if len(groups) < 2:
        raise DomainError("pairwise_t2 needs at least two groups")
    if transform != "none" and any(g.dim != 3 for g in groups):
        raise DomainError(f"transform {transform!r} expects 3-channel observations")
    tg = [g.map(lambda o: apply_transform(o, transform, scale, eps)) for g in groups]

    k = len(tg)
    t2 = np.zeros((k, k))
    pv = np.ones((k, k))
    out = PairwiseMatrix([g.label for g in groups], t2, pv, transform)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                res = hotelling_t2(tg[i], tg[j], fallback=fallback)
            except (SingularCovarianceError, InsufficientSampleError, DomainError) as exc:
                t2[i, j] = t2[j, i] = pv[i, j] = pv[j, i] = math.nan
                out.failures[(i, j)] = str(exc)
                continue
            t2[i, j] = t2[j, i] = res.t2
            pv[i, j] = pv[j, i] = res.p_value
            out.fallbacks += res.singular_fallback
    return out


def write_matrix_csv(labels, matrix, dest, fmt: str = ".12g") -> None:
    """Table layout: header of labels, one row per group, NaN for failed cells.

    ``dest`` is a path or an open text stream.
    """
    if hasattr(dest, "write"):
        _write_matrix(csv.writer(dest), labels, matrix, fmt)
        return
    with Path(dest).open("w", newline="") as fh:
        _write_matrix(csv.writer(fh), labels, matrix, fmt)


def _write_matrix(w, labels, matrix, fmt):
    w.writerow(["group", *labels])
    for label, row in zip(labels, np.asarray(matrix)):
        w.writerow([label, *(format(float(v), fmt) for v in row)])


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["group"]:
        raise DomainError(f"{path}: not a matrix CSV")
    labels = rows[0][1:]
    return labels, np.array([[float(v) for v in r[1:]] for r in rows[1:]])
