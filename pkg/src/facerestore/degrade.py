"""Synthetic degradation: blur kernels and blur-then-decimate downsampling.

Motion kernels come from an inertial random walk: the step direction is a
random heading perturbed by seeded Gaussian noise at every step, the
resulting trajectory is recentered on its center of mass, scaled to fit the
kernel support, and rasterized with bilinear splatting. The walk is a
stand-in model; it is fully seeded, so kernel banks are reproducible.

Downsampling decimates (takes every scale-th pixel) after the blur; the
blur kernel already band-limits the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_core import ImagePlane, ImageStack, Kernel2D, convolve

__all__ = [
    "DegradeSpec",
    "KERNEL_BANK_SIZE",
    "bank_kernel",
    "degrade",
    "gen_gaussian_kernel",
    "gen_motion_kernel",
]

KERNEL_BANK_SIZE = 200

MOTION_SIZE_MIN = 11
MOTION_SIZE_MAX = 31


@dataclass(frozen=True)
class DegradeSpec:
    """Parameters of one degradation draw."""

    kernel_kind: str = "gaussian"  # "motion" or "gaussian"
    kernel_size: int = 11
    gaussian_sigma: float = 1.5
    scale_factor: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        if self.kernel_kind not in ("motion", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kernel_kind!r}")
        if self.kernel_size % 2 == 0 or self.kernel_size < 1:
            raise ValueError(f"kernel size must be odd and positive, got {self.kernel_size}")
        if self.kernel_kind == "motion" and not (
            MOTION_SIZE_MIN <= self.kernel_size <= MOTION_SIZE_MAX
        ):
            raise ValueError(
                f"motion kernel size must lie in [{MOTION_SIZE_MIN}, {MOTION_SIZE_MAX}], "
                f"got {self.kernel_size}"
            )
        if self.scale_factor < 1:
            raise ValueError(f"scale factor must be >= 1, got {self.scale_factor}")

    def kernel(self) -> Kernel2D:
        if self.kernel_kind == "gaussian":
            return gen_gaussian_kernel(self.kernel_size, self.gaussian_sigma)
        return bank_kernel(self.rng_seed, self.kernel_size)


def gen_gaussian_kernel(size: int, sigma: float) -> Kernel2D:
    """Normalized isotropic Gaussian kernel."""
    if size % 2 == 0 or size < 1:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = size // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    x, y = np.meshgrid(coords, coords)
    taps = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return Kernel2D(taps / taps.sum())


def gen_motion_kernel(
    size: int,
    seed: int,
    *,
    n_steps: int | None = None,
    turn_sigma: float = 0.5,
    step_len: float | None = None,
    initial_angle: float | None = None,
) -> Kernel2D:
    """Random camera-shake trajectory rasterized into a size x size kernel.

    The keyword knobs exist for degenerate configurations (e.g. a straight
    horizontal walk with unit steps yields an exact uniform line kernel);
    defaults give a curved sub-pixel walk whose extent fills the support.
    """
    if size % 2 == 0 or size < 3:
        raise ValueError(f"motion kernel size must be odd and >= 3, got {size}")
    rng = np.random.default_rng(seed)
    if n_steps is None:
        n_steps = 3 * size
    angle = rng.uniform(0.0, 2.0 * math.pi) if initial_angle is None else float(initial_angle)
    pos = np.zeros((n_steps + 1, 2), dtype=np.float64)
    for i in range(n_steps):
        step = rng.uniform(0.3, 0.8) if step_len is None else float(step_len)
        pos[i + 1, 0] = pos[i, 0] + step * math.cos(angle)
        pos[i + 1, 1] = pos[i, 1] + step * math.sin(angle)
        angle += turn_sigma * rng.standard_normal()

    # Recenter on the center of mass, then scale so the walk exactly spans
    # the support. Bilinear splatting preserves first moments, so the
    # rasterized kernel's center of mass lands on the geometric center.
    pos -= pos.mean(axis=0)
    half = (size - 1) / 2.0
    extent = np.abs(pos).max()
    if extent > 0:
        pos *= half / extent

    taps = np.zeros((size, size), dtype=np.float64)
    center = half
    for px, py in pos:
        fx, fy = px + center, py + center
        x0, y0 = int(math.floor(fx)), int(math.floor(fy))
        wx, wy = fx - x0, fy - y0
        for dy, wyy in ((0, 1.0 - wy), (1, wy)):
            for dx, wxx in ((0, 1.0 - wx), (1, wx)):
                w = wxx * wyy
                yy, xx = y0 + dy, x0 + dx
                if w > 0.0 and 0 <= yy < size and 0 <= xx < size:
                    taps[yy, xx] += w
    return Kernel2D(taps / taps.sum())


def bank_kernel(seed: int, size: int) -> Kernel2D:
    """Kernel from the materialized 200-seed motion bank (seeds 0..199)."""
    return gen_motion_kernel(size, seed % KERNEL_BANK_SIZE)


def degrade(hr: ImageStack, spec: DegradeSpec) -> ImageStack:
    """Blur each channel with the spec's kernel, then decimate by the scale."""
    s = spec.scale_factor
    if hr.width % s or hr.height % s:
        raise ValueError(
            f"image dimensions {hr.width}x{hr.height} are not divisible by scale {s}"
        )
    kernel = spec.kernel()
    planes = []
    for c in hr.channels:
        blurred = convolve(c, kernel)
        planes.append(ImagePlane(blurred.data[::s, ::s]))
    return ImageStack(tuple(planes), hr.color_space)
