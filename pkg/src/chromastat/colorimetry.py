"""Spectral integration and CIE XYZ <-> sRGB conversion.

Pipeline::

    spectrum --(trapezoid against CMFs)--> XYZ --(M)--> linear RGB --(gamma)--> sRGB

The sRGB matrix and the transfer-function coefficients are kept exactly as
published (four-decimal matrix, rational gamma coefficients 323/25, 211/200,
11/200 and 5/12).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .errors import DataFormatError, DomainError

__all__ = [
    "CMF_ENV_VAR",
    "DEFAULT_EPS",
    "DECODE_KNOT",
    "ENCODE_KNOT",
    "M_XYZ_TO_RGB",
    "M_RGB_TO_XYZ",
    "ColorMatchingFunctions",
    "LinearRgb",
    "SpectralDistribution",
    "Tristimulus",
    "UnitRgb",
    "clamp_open_unit",
    "gamma_decode",
    "gamma_encode",
    "integrate_tristimulus",
    "linear_rgb_to_xyz",
    "load_cmf",
    "read_cmf_csv",
    "read_spd_csv",
    "srgb_to_xyz",
    "trapezoid_product",
    "xyz_to_linear_rgb",
    "xyz_to_srgb",
]

#: Environment variable naming a CMF CSV used instead of the bundled table.
CMF_ENV_VAR = "CHROMASTAT_CMF"

#: Half a 16-bit quantization step below the 8-bit grid; keeps pixel values
#: 0 and 255 inside the open unit interval.
DEFAULT_EPS = 1.0 / (2 * 255 * 256)

_M_TEXT = (
    ("3.2406", "-1.5372", "-0.4986"),
    ("-0.9689", "1.8758", "0.0415"),
    ("0.0557", "-0.2040", "1.0570"),
)


def _exact_inverse(rows):
    # adjugate / determinant over the rationals, rounded once at the end
    a = [[Fraction(v) for v in row] for row in rows]
    cof = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = a[r[0]][c[0]] * a[r[1]][c[1]] - a[r[0]][c[1]] * a[r[1]][c[0]]
            cof[i][j] = minor if (i + j) % 2 == 0 else -minor
    det = sum(a[0][j] * cof[0][j] for j in range(3))
    return [[float(cof[j][i] / det) for j in range(3)] for i in range(3)]


M_XYZ_TO_RGB = np.array([[float(v) for v in row] for row in _M_TEXT])
M_XYZ_TO_RGB.flags.writeable = False
M_RGB_TO_XYZ = np.array(_exact_inverse(_M_TEXT))
M_RGB_TO_XYZ.flags.writeable = False

ENCODE_KNOT = 0.0031308
DECODE_KNOT = 323 * ENCODE_KNOT / 25


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralDistribution:
    """A sampled nonnegative function of wavelength (nm).

    Used for radiance spectra, cone sensitivities and single CMF channels.
    Between samples the function is taken to be piecewise linear.
    """

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        wl = _readonly(self.wavelengths)
        vals = _readonly(self.values)
        if wl.ndim != 1 or vals.ndim != 1:
            raise DomainError("wavelengths and values must be one-dimensional")
        if wl.size != vals.size:
            raise DomainError(
                f"length mismatch: {wl.size} wavelengths vs {vals.size} values"
            )
        if wl.size < 2:
            raise DomainError("a spectral distribution needs at least 2 samples")
        if not np.all(np.isfinite(wl)) or not np.all(np.isfinite(vals)):
            raise DomainError("non-finite wavelength or value")
        if np.any(np.diff(wl) <= 0):
            raise DomainError("wavelengths must be strictly increasing")
        if np.any(vals < 0):
            raise DomainError("spectral values must be nonnegative")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "values", vals)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.wavelengths[0]), float(self.wavelengths[-1])

    def __call__(self, wl):
        return np.interp(wl, self.wavelengths, self.values)

    def scaled(self, alpha: float) -> SpectralDistribution:
        return SpectralDistribution(self.wavelengths, alpha * self.values)

    def __len__(self):
        return self.wavelengths.size


@dataclass(frozen=True, eq=False)
class ColorMatchingFunctions:
    """The three CMF channels (x-bar, y-bar, z-bar) on one wavelength grid."""

    xbar: SpectralDistribution
    ybar: SpectralDistribution
    zbar: SpectralDistribution

    def __post_init__(self):
        grid = self.xbar.wavelengths
        for ch in (self.ybar, self.zbar):
            if not np.array_equal(ch.wavelengths, grid):
                raise DomainError("CMF channels must share one wavelength grid")

    @property
    def wavelengths(self) -> np.ndarray:
        return self.xbar.wavelengths

    @property
    def channels(self) -> tuple[SpectralDistribution, ...]:
        return (self.xbar, self.ybar, self.zbar)

    @classmethod
    def from_arrays(cls, wavelengths, xbar, ybar, zbar) -> ColorMatchingFunctions:
        return cls(
            SpectralDistribution(wavelengths, xbar),
            SpectralDistribution(wavelengths, ybar),
            SpectralDistribution(wavelengths, zbar),
        )


def _positive_finite(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive real, got {value!r}")
    return value


@dataclass(frozen=True)
class Tristimulus:
    """CIE XYZ tristimulus values; every component strictly positive."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, _positive_finite(name, getattr(self, name)))

    @classmethod
    def from_array(cls, a) -> Tristimulus:
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(*a)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __iter__(self):
        return iter((self.x, self.y, self.z))


@dataclass(frozen=True)
class LinearRgb:
    """Linear-light RGB before gamma encoding; may lie outside [0, 1]."""

    r: float
    g: float
    b: float

    def __post_init__(self):
        for name in ("r", "g", "b"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def in_gamut(self) -> bool:
        return all(0.0 <= c <= 1.0 for c in (self.r, self.g, self.b))

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b])

    def __iter__(self):
        return iter((self.r, self.g, self.b))


def clamp_open_unit(v, eps: float = DEFAULT_EPS):
    """Clamp ``v`` (scalar or array) into ``[eps, 1 - eps]``.

    >>> clamp_open_unit(0.0, 0.01), clamp_open_unit(1.0, 0.01), clamp_open_unit(0.5, 0.01)
    (0.01, 0.99, 0.5)
    """
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
    out = np.minimum(np.maximum(v, eps), 1.0 - eps)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class UnitRgb:
    """Display RGB scaled into the open cube (0, 1)^3.

    Values outside the open interval are clamped on construction (with
    :data:`DEFAULT_EPS`) and ``clamped`` is set. Use :meth:`from_values` to
    clamp with a different margin.
    """

    u: float
    v: float
    w: float
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        hit = self.clamped
        for name in ("u", "v", "w"):
            value = float(getattr(self, name))
            if math.isnan(value):
                raise DomainError(f"{name} is NaN")
            if not 0.0 < value < 1.0:
                value = clamp_open_unit(value)
                hit = True
            object.__setattr__(self, name, value)
        object.__setattr__(self, "clamped", hit)

    @classmethod
    def from_values(cls, u, v, w, eps: float = DEFAULT_EPS) -> UnitRgb:
        raw = np.array([u, v, w], dtype=float)
        if np.any(np.isnan(raw)):
            raise DomainError("NaN component")
        c = clamp_open_unit(raw, eps)
        return cls(*c, clamped=bool(np.any(c != raw)))

    @classmethod
    def from_array(cls, a, eps: float = DEFAULT_EPS) -> UnitRgb:
        return cls.from_values(*np.asarray(a, dtype=float).reshape(3), eps=eps)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w])

    def __iter__(self):
        return iter((self.u, self.v, self.w))


# ---------------------------------------------------------------------------
# Spectral integration
# ---------------------------------------------------------------------------


def _overlap_grid(reference: np.ndarray, other: np.ndarray) -> np.ndarray:
    lo = max(reference[0], other[0])
    hi = min(reference[-1], other[-1])
    if not lo < hi:
        raise DomainError(
            f"wavelength ranges [{other[0]}, {other[-1]}] and "
            f"[{reference[0]}, {reference[-1]}] do not overlap"
        )
    inner = reference[(reference > lo) & (reference < hi)]
    return np.concatenate(([lo], inner, [hi]))


def trapezoid_product(f: SpectralDistribution, g: SpectralDistribution) -> float:
    """Trapezoidal integral of ``f * g`` over their common support.

    The nodes are the samples of ``g`` inside the overlap plus the two
    overlap endpoints; ``f`` is linearly interpolated onto them.
    """
    grid = _overlap_grid(g.wavelengths, f.wavelengths)
    return float(trapezoid(f(grid) * g(grid), grid))


def integrate_tristimulus(
    spd: SpectralDistribution,
    cmf: ColorMatchingFunctions,
    k: float = 1.0,
    normalization: str = "unit",
) -> Tristimulus:
    """Integrate a spectrum against the colour matching functions.

    Parameters
    ----------
    spd : SpectralDistribution
        Spectral radiance.
    cmf : ColorMatchingFunctions
        Observer; defines the quadrature grid.
    k : float
        Scale applied to all three integrals when ``normalization="unit"``.
    normalization : {"unit", "Y100"}
        ``"Y100"`` ignores ``k`` and rescales so that ``Y == 100``.

    Raises
    ------
    DomainError
        Empty wavelength overlap, or a channel integrates to zero.
    """
    if normalization not in ("unit", "Y100"):
        raise DomainError(f"unknown normalization {normalization!r}")
    raw = np.array([trapezoid_product(spd, ch) for ch in cmf.channels])
    if normalization == "Y100":
        if raw[1] <= 0:
            raise DomainError("cannot normalize to Y=100: luminance integral is zero")
        k = 100.0 / raw[1]
    else:
        k = _positive_finite("k", k)
    xyz = k * raw
    if np.any(xyz <= 0):
        zero = [n for n, c in zip("XYZ", xyz) if c <= 0]
        raise DomainError(f"tristimulus channel(s) {', '.join(zero)} integrate to zero")
    return Tristimulus(*xyz)


# ---------------------------------------------------------------------------
# Linear transform and transfer function
# ---------------------------------------------------------------------------


def xyz_to_linear_rgb(t: Tristimulus) -> LinearRgb:
    return LinearRgb(*(M_XYZ_TO_RGB @ t.as_array()))


def linear_rgb_to_xyz(c: LinearRgb) -> Tristimulus:
    xyz = M_RGB_TO_XYZ @ c.as_array()
    if np.any(xyz <= 0):
        raise DomainError(f"linear RGB {tuple(c)} maps outside the positive XYZ octant")
    return Tristimulus(*xyz)


def _unit_interval(a, what):
    a = np.asarray(a, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < 0) or np.any(a > 1):
        raise DomainError(f"{what} requires values in [0, 1]")
    return a


def gamma_encode(u):
    """sRGB transfer function, linear light -> encoded value.

    Works elementwise on scalars and arrays; scalars come back as ``float``.
    """
    a = _unit_interval(u, "gamma_encode")
    out = np.where(a <= ENCODE_KNOT, 323 * a / 25, (211 * a ** (5 / 12) - 11) / 200)
    return float(out) if out.ndim == 0 else out


def gamma_decode(v):
    """Inverse of :func:`gamma_encode`.

    The branch point is the image of the encode knot under the linear branch.
    Just above the encode knot the power branch lies about 2.9e-8 below the
    linear one, so encoded values in that sliver decode through the linear
    branch.
    """
    a = _unit_interval(v, "gamma_decode")
    out = np.where(a <= DECODE_KNOT, 25 * a / 323, ((200 * a + 11) / 211) ** (12 / 5))
    return float(out) if out.ndim == 0 else out


def xyz_to_srgb(t: Tristimulus, eps: float = DEFAULT_EPS) -> UnitRgb:
    """XYZ to encoded sRGB in the open unit cube.

    Out-of-gamut linear values are clipped to [0, 1] before encoding and the
    result carries ``clamped=True``.
    """
    lin = M_XYZ_TO_RGB @ t.as_array()
    clipped = np.clip(lin, 0.0, 1.0)
    out = UnitRgb.from_array(gamma_encode(clipped), eps=eps)
    if np.any(clipped != lin) and not out.clamped:
        out = UnitRgb(*out.as_array(), clamped=True)
    return out


def srgb_to_xyz(c: UnitRgb) -> Tristimulus:
    return linear_rgb_to_xyz(LinearRgb(*gamma_decode(c.as_array())))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _read_numeric_csv(path, header):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if [h.strip() for h in first] != header:
            raise DataFormatError(
                f"{path}: expected header {','.join(header)}, got {','.join(first)}", 1
            )
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: expected {len(header)} fields, got {len(row)}", reader.line_num
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}: {exc}", reader.line_num) from None
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need at least 2 data rows")
    return np.array(rows)


def read_cmf_csv(path) -> ColorMatchingFunctions:
    """Read ``wavelength_nm,xbar,ybar,zbar`` (the CVRL download layout)."""
    data = _read_numeric_csv(path, ["wavelength_nm", "xbar", "ybar", "zbar"])
    try:
        return ColorMatchingFunctions.from_arrays(*data.T)
    except DomainError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def read_spd_csv(path) -> SpectralDistribution:
    """Read a spectrum stored as ``wavelength_nm,value``."""
    data = _read_numeric_csv(path, ["wavelength_nm", "value"])
    try:
        return SpectralDistribution(data[:, 0], data[:, 1])
    except DomainError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def load_cmf(path=None) -> ColorMatchingFunctions:
    """Load CMFs from ``path``, else ``$CHROMASTAT_CMF``, else the bundled
    CIE 1931 2-degree observer (CVRL, 1 nm, 360-830 nm)."""
    path = path or os.environ.get(CMF_ENV_VAR)
    if path:
        return read_cmf_csv(path)
    ref = resources.files("chromastat") / "data" / "cie1931_2deg.csv"
    with resources.as_file(ref) as p:
        return read_cmf_csv(p)
