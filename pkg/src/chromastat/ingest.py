"""Reduce images to mean colors and organize them into sample groups.

Layout on disk: one subdirectory per group, images inside it::

    root/
      g0/ img_00.png img_01.png ...
      g1/ ...
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .colorimetry import DEFAULT_EPS, UnitRgb, gamma_decode
from .errors import DataFormatError, DomainError
from .mvstat import SampleGroup

__all__ = [
    "IMAGE_SUFFIXES",
    "SUMMARY_HEADER",
    "ImageSummary",
    "IngestResult",
    "central_crop",
    "groups_from_summaries",
    "ingest_directory",
    "load_pixels",
    "read_summaries",
    "summarize_image",
    "write_summaries",
]

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
SUMMARY_HEADER = ["group", "file", "n_pixels", "r_mean", "g_mean", "b_mean"]


@dataclass(frozen=True)
class ImageSummary:
    """Mean color of one image, in [0, 255] and scaled into (0, 1)."""

    source: str
    mean_rgb_255: tuple[float, float, float]
    pixel_count: int
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        mean = tuple(float(c) for c in self.mean_rgb_255)
        if len(mean) != 3:
            raise DomainError(f"{self.source}: mean must have 3 channels")
        if not all(math.isfinite(c) and 0.0 <= c <= 255.0 for c in mean):
            raise DomainError(f"{self.source}: channel means must lie in [0, 255], got {mean}")
        if int(self.pixel_count) != self.pixel_count or self.pixel_count < 1:
            raise DomainError(f"{self.source}: pixel count must be a positive integer")
        object.__setattr__(self, "mean_rgb_255", mean)
        object.__setattr__(self, "pixel_count", int(self.pixel_count))

    @property
    def mean_rgb_unit(self) -> UnitRgb:
        return UnitRgb.from_array(np.array(self.mean_rgb_255) / 255.0, eps=self.eps)


def central_crop(pixels: np.ndarray, fraction: float) -> np.ndarray:
    """Central window covering ``fraction`` of each side (at least one pixel)."""
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"ROI fraction must lie in (0, 1], got {fraction!r}")
    if fraction == 1.0:
        return pixels
    h, w = pixels.shape[:2]
    ch, cw = max(1, round(h * fraction)), max(1, round(w * fraction))
    top, left = (h - ch) // 2, (w - cw) // 2
    return pixels[top : top + ch, left : left + cw]


def summarize_image(
    pixels,
    source: str = "<array>",
    roi: float = 1.0,
    linearize: bool = False,
    eps: float = DEFAULT_EPS,
) -> ImageSummary:
    """Per-channel mean of an ``H x W x 3`` image.

    ``uint8`` input is averaged by exact integer summation. ``uint16`` input
    is summed exactly and divided by 257 to land on the 8-bit scale. With
    ``linearize`` each pixel is gamma-decoded before averaging and the mean is
    reported as ``255 * mean(linear)``.
    """
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] < 3:
        raise DomainError(f"{source}: expected an H x W x 3 pixel grid, got shape {px.shape}")
    px = central_crop(px[:, :, :3], roi)
    count = px.shape[0] * px.shape[1]
    if count == 0:
        raise DomainError(f"{source}: empty image")

    if px.dtype == np.uint8:
        full = 255
    elif px.dtype == np.uint16:
        full = 65535
    else:
        raise DomainError(f"{source}: unsupported pixel dtype {px.dtype}")

    if linearize:
        lin = gamma_decode(px.reshape(-1, 3) / full)
        mean = 255.0 * lin.mean(axis=0)
    else:
        # Python ints: exact, independent of summation order
        sums = [int(s) for s in px.reshape(-1, 3).sum(axis=0, dtype=np.uint64)]
        scale = 1 if full == 255 else 257
        mean = [s / (count * scale) for s in sums]
    return ImageSummary(source, tuple(mean), count, eps)


def load_pixels(path) -> np.ndarray:
    """Decode PNG/JPEG into an ``H x W x 3`` array (``uint8`` or ``uint16``).

    Alpha is dropped; palette and grayscale images are expanded to RGB.
    """
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                a = np.asarray(im).astype(np.uint16)
                return np.repeat(a[:, :, None], 3, axis=2)
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DataFormatError(f"{path}: cannot decode image ({exc})") from None


@dataclass
class IngestResult:
    groups: list[SampleGroup] = field(default_factory=list)
    summaries: dict[str, list[ImageSummary]] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)


def ingest_directory(
    root,
    roi: float = 1.0,
    linearize: bool = False,
    eps: float = DEFAULT_EPS,
    workers: int | None = None,
) -> IngestResult:
    """One group per immediate subdirectory of ``root``, in sorted order.

    Undecodable files are skipped with a diagnostic. Groups with fewer than
    two usable images are dropped with a diagnostic.
    """
    root = Path(root)
    if not root.is_dir():
        raise DomainError(f"{root}: not a directory")
    result = IngestResult()

    def summarize(path):
        return summarize_image(load_pixels(path), source=path.name, roi=roi, linearize=linearize, eps=eps)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for sub in sorted(p for p in root.iterdir() if p.is_dir()):
            files = sorted(
                p for p in sub.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
            )
            futures = [(f, pool.submit(summarize, f)) for f in files]
            summaries = []
            for f, fut in futures:
                try:
                    summaries.append(fut.result())
                except (DataFormatError, DomainError) as exc:
                    result.diagnostics.append(f"{sub.name}/{f.name}: skipped: {exc}")
            if len(summaries) < 2:
                result.diagnostics.append(
                    f"{sub.name}: rejected, {len(summaries)} usable image(s), need >= 2"
                )
                continue
            result.summaries[sub.name] = summaries
            result.groups.append(
                SampleGroup(sub.name, np.array([s.mean_rgb_255 for s in summaries]))
            )
    for d in result.diagnostics:
        log.warning(d)
    return result


def write_summaries(summaries, path) -> None:
    """Write ``{label: [ImageSummary, ...]}`` to the summaries CSV.

    Means are written with 17 significant digits so reading them back is
    lossless.
    """
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for label, items in summaries.items():
            for s in items:
                w.writerow([label, s.source, s.pixel_count, *(format(c, ".17g") for c in s.mean_rgb_255)])


def read_summaries(path, eps: float = DEFAULT_EPS) -> dict[str, list[ImageSummary]]:
    """Inverse of :func:`write_summaries`; groups keep first-appearance order."""
    path = Path(path)
    out: dict[str, list[ImageSummary]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != SUMMARY_HEADER:
            raise DataFormatError(f"{path}: expected header {','.join(SUMMARY_HEADER)}", 1)
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != len(SUMMARY_HEADER):
                raise DataFormatError(f"{path}: expected 6 fields, got {len(row)}", line)
            label, source, n_pixels, *means = row
            try:
                summary = ImageSummary(source, tuple(float(m) for m in means), int(n_pixels), eps)
            except (ValueError, DomainError) as exc:
                raise DataFormatError(f"{path}: {exc}", line) from None
            out.setdefault(label, []).append(summary)
    return out


def groups_from_summaries(summaries) -> list[SampleGroup]:
    return [
        SampleGroup(label, np.array([s.mean_rgb_255 for s in items]))
        for label, items in summaries.items()
    ]
