"""Raster types and pixel-level kernels.

All pixel math is done in float64. Images are stored as read-only numpy
arrays in [0, 1]; operations are pure functions, so everything here is safe
to share across threads.

Conventions used throughout the package:

* an image plane is indexed ``data[y, x]`` (row-major);
* a patch of side ``s`` centered on ``(x, y)`` covers columns
  ``[x - s//2, x - s//2 + s)`` and the analogous rows, which keeps the
  window symmetric for odd sides and biased half a pixel left/up for even
  sides;
* bicubic resampling aligns pixel centers: output pixel ``i`` samples
  source coordinate ``(i + 0.5) / scale - 0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "ColorSpace",
    "ImagePlane",
    "ImageStack",
    "Kernel2D",
    "Patch",
    "bicubic_resize",
    "bicubic_resize_plane",
    "box_filter",
    "convolve",
    "extract_patch",
    "luma_recombine",
    "rgb_to_luma",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class ColorSpace(Enum):
    RGB = "rgb"
    LUMA = "luma"
    MASK = "mask"


@dataclass(frozen=True)
class ImagePlane:
    """A single 2-D raster of intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"image plane must be a non-empty 2-D array, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("image plane contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("image plane values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def from_array(cls, a: np.ndarray, clamp: bool = False) -> "ImagePlane":
        a = np.asarray(a, dtype=np.float64)
        if clamp:
            a = np.clip(a, 0.0, 1.0)
        return cls(a)

    @classmethod
    def full(cls, height: int, width: int, value: float = 0.0) -> "ImagePlane":
        return cls(np.full((height, width), value, dtype=np.float64))


@dataclass(frozen=True)
class ImageStack:
    """An ordered list of same-sized planes plus a color-space tag."""

    channels: tuple[ImagePlane, ...]
    color_space: ColorSpace

    def __post_init__(self):
        if not self.channels:
            raise ValueError("image stack needs at least one channel")
        object.__setattr__(self, "channels", tuple(self.channels))
        w, h = self.channels[0].width, self.channels[0].height
        for c in self.channels:
            if (c.width, c.height) != (w, h):
                raise ValueError("all channels in a stack must share dimensions")
        if self.color_space is ColorSpace.RGB and len(self.channels) != 3:
            raise ValueError("RGB stack must have exactly 3 channels")
        if self.color_space is ColorSpace.MASK:
            for c in self.channels:
                if not np.isin(c.data, (0.0, 1.0)).all():
                    raise ValueError("mask channels may contain only 0 and 1")

    @property
    def width(self) -> int:
        return self.channels[0].width

    @property
    def height(self) -> int:
        return self.channels[0].height

    def as_array(self) -> np.ndarray:
        """(channels, height, width) float64 view of the stack."""
        return np.stack([c.data for c in self.channels])

    @classmethod
    def from_array(cls, a: np.ndarray, color_space: ColorSpace, clamp: bool = False) -> "ImageStack":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim == 2:
            a = a[None]
        return cls(tuple(ImagePlane.from_array(ch, clamp=clamp) for ch in a), color_space)

    @classmethod
    def rgb(cls, r: np.ndarray, g: np.ndarray, b: np.ndarray) -> "ImageStack":
        return cls((ImagePlane(r), ImagePlane(g), ImagePlane(b)), ColorSpace.RGB)


@dataclass(frozen=True)
class Kernel2D:
    """A square 2-D filter kernel with odd side length."""

    taps: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.taps, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError(f"kernel must be square, got shape {t.shape}")
        if t.shape[0] % 2 == 0:
            raise ValueError(f"kernel side must be odd, got {t.shape[0]}")
        if not np.isfinite(t).all():
            raise ValueError("kernel contains non-finite taps")
        object.__setattr__(self, "taps", _freeze(t))

    @property
    def size(self) -> int:
        return self.taps.shape[0]

    def is_normalized_blur(self, tol: float = 1e-6) -> bool:
        """True if taps are non-negative and sum to 1 within ``tol``."""
        return bool(self.taps.min() >= 0.0 and abs(self.taps.sum() - 1.0) <= tol)

    def center_of_mass(self) -> tuple[float, float]:
        """(x, y) center of mass in tap coordinates."""
        total = self.taps.sum()
        ys, xs = np.mgrid[0 : self.size, 0 : self.size]
        return float((xs * self.taps).sum() / total), float((ys * self.taps).sum() / total)


@dataclass(frozen=True)
class Patch:
    """A flattened square window extracted from an image plane."""

    center: tuple[int, int]
    side: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size != self.side * self.side:
            raise ValueError(f"patch of side {self.side} needs {self.side ** 2} values, got {v.size}")
        object.__setattr__(self, "values", _freeze(v))


# ---------------------------------------------------------------------------
# Bicubic resampling (Keys cubic convolution, a = -0.5)
# ---------------------------------------------------------------------------


def _cubic_weight(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    at = np.abs(t)
    w = np.zeros_like(at)
    near = at <= 1.0
    far = (at > 1.0) & (at < 2.0)
    w[near] = (a + 2.0) * at[near] ** 3 - (a + 3.0) * at[near] ** 2 + 1.0
    w[far] = a * at[far] ** 3 - 5.0 * a * at[far] ** 2 + 8.0 * a * at[far] - 4.0 * a
    return w


def _cubic_matrix(n_out: int, n_in: int, scale: float) -> np.ndarray:
    """(n_out, n_in) row-stochastic interpolation matrix along one axis."""
    out_idx = np.arange(n_out, dtype=np.float64)
    src = (out_idx + 0.5) / scale - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    for k in range(-1, 3):
        w = _cubic_weight(frac - k)
        idx = np.clip(base + k, 0, n_in - 1)
        np.add.at(mat, (np.arange(n_out), idx), w)
    return mat


def _round_dim(n: int, scale: float) -> int:
    return int(math.floor(n * scale + 0.5))


def bicubic_resize_plane(img: ImagePlane, scale: float) -> ImagePlane:
    """Resize one plane with separable Keys cubic interpolation (a = -0.5)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if scale == 1:
        return img
    out_h = _round_dim(img.height, scale)
    out_w = _round_dim(img.width, scale)
    if out_h == 0 or out_w == 0:
        raise ValueError(f"scale {scale} produces a zero-dimension output")
    wy = _cubic_matrix(out_h, img.height, scale)
    wx = _cubic_matrix(out_w, img.width, scale)
    out = wy @ img.data @ wx.T
    return ImagePlane.from_array(out, clamp=True)


def bicubic_resize(img: ImageStack, scale: float) -> ImageStack:
    """Per-channel bicubic resize; values are clamped back to [0, 1]."""
    return ImageStack(
        tuple(bicubic_resize_plane(c, scale) for c in img.channels), img.color_space
    )


# ---------------------------------------------------------------------------
# Convolution and box filtering
# ---------------------------------------------------------------------------


def convolve(img: ImagePlane, k: Kernel2D, border: str = "replicate") -> ImagePlane:
    """2-D convolution with a normalized blur kernel and replicated edges.

    Output pixels accumulate over kernel taps in a fixed row-major order,
    so results are bit-identical regardless of scheduling.
    """
    if border != "replicate":
        raise ValueError(f"unsupported border mode {border!r}")
    if not k.is_normalized_blur():
        raise ValueError("blur kernel must be non-negative and sum to 1 within 1e-6")
    s = k.size
    r = s // 2
    padded = np.pad(img.data, r, mode="edge")
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.float64)
    flipped = k.taps[::-1, ::-1]
    for ky in range(s):
        for kx in range(s):
            tap = flipped[ky, kx]
            if tap != 0.0:
                out += tap * padded[ky : ky + h, kx : kx + w]
    return ImagePlane.from_array(out, clamp=True)


def _integral(a: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero row/column prepended."""
    sat = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=sat[1:, 1:])
    return sat


def window_sums(a: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel sum and pixel count of the (2r+1)^2 window clipped to bounds."""
    h, w = a.shape
    sat = _integral(a)
    y = np.arange(h)
    x = np.arange(w)
    y0 = np.maximum(y - radius, 0)
    y1 = np.minimum(y + radius, h - 1) + 1
    x0 = np.maximum(x - radius, 0)
    x1 = np.minimum(x + radius, w - 1) + 1
    total = (
        sat[np.ix_(y1, x1)] - sat[np.ix_(y0, x1)] - sat[np.ix_(y1, x0)] + sat[np.ix_(y0, x0)]
    )
    area = np.outer(y1 - y0, x1 - x0).astype(np.float64)
    return total, area


def box_filter_array(a: np.ndarray, radius: int) -> np.ndarray:
    """Windowed mean on a bare array; borders divide by the clipped area."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return np.array(a, dtype=np.float64)
    total, area = window_sums(np.asarray(a, dtype=np.float64), radius)
    return total / area


def box_filter(img: ImagePlane, radius: int) -> ImagePlane:
    """O(1)-per-pixel windowed mean via a summed-area table."""
    if radius == 0:
        return img
    return ImagePlane.from_array(box_filter_array(img.data, radius), clamp=True)


# ---------------------------------------------------------------------------
# Patch extraction
# ---------------------------------------------------------------------------


def patch_bounds(center: tuple[int, int], side: int) -> tuple[int, int, int, int]:
    """(x0, y0, x1, y1) half-open window of a patch; see module docstring."""
    x, y = center
    x0 = x - side // 2
    y0 = y - side // 2
    return x0, y0, x0 + side, y0 + side


def extract_patch(img: ImagePlane, center: tuple[int, int], side: int) -> Patch:
    """Extract a square window; windows crossing the border are rejected."""
    if side < 1:
        raise ValueError(f"patch side must be >= 1, got {side}")
    x0, y0, x1, y1 = patch_bounds(center, side)
    if x0 < 0 or y0 < 0 or x1 > img.width or y1 > img.height:
        raise ValueError(
            f"patch of side {side} at {center} exceeds image bounds "
            f"{img.width}x{img.height}"
        )
    return Patch(center=tuple(center), side=side, values=img.data[y0:y1, x0:x1].ravel())


# ---------------------------------------------------------------------------
# Color conversion
# ---------------------------------------------------------------------------


def rgb_to_luma(img: ImageStack) -> ImagePlane:
    """BT.601 luminance of an RGB stack."""
    if img.color_space is not ColorSpace.RGB or len(img.channels) != 3:
        raise ValueError("rgb_to_luma expects a 3-channel RGB stack")
    r, g, b = (c.data for c in img.channels)
    wr, wg, wb = LUMA_WEIGHTS
    return ImagePlane.from_array(wr * r + wg * g + wb * b, clamp=True)


def luma_recombine(luma: ImagePlane, chroma_source: ImageStack) -> ImageStack:
    """Replace the luminance of ``chroma_source`` while keeping its chroma.

    Each output channel is the source channel shifted by the luminance
    change, which preserves the per-pixel chroma offsets exactly.
    """
    if chroma_source.color_space is not ColorSpace.RGB:
        raise ValueError("luma_recombine expects an RGB chroma source")
    if luma.shape != (chroma_source.height, chroma_source.width):
        raise ValueError("luma plane and chroma source dimensions differ")
    old = rgb_to_luma(chroma_source)
    delta = luma.data - old.data
    planes = tuple(
        ImagePlane.from_array(c.data + delta, clamp=True) for c in chroma_source.channels
    )
    return ImageStack(planes, ColorSpace.RGB)
