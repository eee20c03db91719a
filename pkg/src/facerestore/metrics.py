"""Quality metrics: PSNR, single-scale SSIM, and PCA identity similarity.

SSIM follows the standard recipe: 11x11 Gaussian window with sigma 1.5,
C1 = 0.01^2 and C2 = 0.03^2 on the [0, 1] scale, averaged over all fully
interior window positions.

The identity metric projects mean-subtracted luminance onto the top
eigenvectors of a training set's covariance and reports the cosine
similarity of the two coefficient vectors (higher is better).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image_core import ColorSpace, ImagePlane, ImageStack, bicubic_resize_plane, rgb_to_luma
from .tensorio import read_tensors, write_tensors

__all__ = [
    "IdentityProjector",
    "build_projector",
    "identity_similarity",
    "psnr",
    "ssim",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def psnr(a: ImageStack, b: ImageStack) -> float:
    """10*log10(1/MSE) on the [0, 1] scale; identical inputs give +inf."""
    if (a.height, a.width, len(a.channels)) != (b.height, b.width, len(b.channels)):
        raise ValueError("psnr inputs must share dimensions and channel count")
    diff = a.as_array() - b.as_array()
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _ssim_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    x, y = np.meshgrid(coords, coords)
    w = np.exp(-(x * x + y * y) / (2.0 * SSIM_SIGMA**2))
    return w / w.sum()


def _window_mean(a: np.ndarray, window: np.ndarray) -> np.ndarray:
    views = sliding_window_view(a, window.shape)
    return np.tensordot(views, window, axes=([2, 3], [0, 1]))


def ssim(a: ImagePlane, b: ImagePlane) -> float:
    """Mean structural similarity between two planes in [0, 1]."""
    if a.shape != b.shape:
        raise ValueError("ssim inputs must share dimensions")
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValueError(
            f"ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images, got {a.shape}"
        )
    w = _ssim_window()
    x, y = a.data, b.data
    mu_x = _window_mean(x, w)
    mu_y = _window_mean(y, w)
    var_x = _window_mean(x * x, w) - mu_x * mu_x
    var_y = _window_mean(y * y, w) - mu_y * mu_y
    cov = _window_mean(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class IdentityProjector:
    """Mean face and orthonormal eigenbasis for identity comparison."""

    mean: np.ndarray  # (d_pixels,)
    basis: np.ndarray  # (d_pixels, n_components), orthonormal columns
    source_dims: tuple[int, int]  # (width, height)

    def __post_init__(self):
        gram = self.basis.T @ self.basis
        if np.abs(gram - np.eye(gram.shape[0])).max() > 1e-6:
            raise ValueError("projector basis columns are not orthonormal")

    def project(self, img: ImageStack | ImagePlane) -> np.ndarray:
        plane = img if isinstance(img, ImagePlane) else _to_luma(img)
        w, h = self.source_dims
        if plane.shape != (h, w):
            plane = bicubic_resize_plane(plane, h / plane.height)
            if plane.shape != (h, w):
                raise ValueError(f"cannot resize {plane.shape} to projector dims {(h, w)}")
        return self.basis.T @ (plane.data.ravel() - self.mean)


def _to_luma(img: ImageStack) -> ImagePlane:
    if img.color_space is ColorSpace.RGB:
        return rgb_to_luma(img)
    return img.channels[0]


def build_projector(
    training_images: list[ImageStack | ImagePlane], n_components: int = 100
) -> IdentityProjector:
    """PCA basis of the training set (capped at n_images - 1 components).

    Uses the Gram-matrix eigendecomposition, so the cost scales with the
    image count rather than the pixel count.
    """
    if len(training_images) < 2:
        raise ValueError("projector needs at least 2 training images")
    planes = [img if isinstance(img, ImagePlane) else _to_luma(img) for img in training_images]
    shape = planes[0].shape
    for p in planes:
        if p.shape != shape:
            raise ValueError("all projector training images must share dimensions")
    x = np.stack([p.data.ravel() for p in planes])  # (n, d)
    mean = x.mean(axis=0)
    xc = x - mean
    gram = xc @ xc.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    keep = min(n_components, len(planes) - 1)
    positive = eigvals > max(1e-12, 1e-10 * eigvals.max())
    keep = min(keep, int(positive.sum()))
    if keep < 1:
        raise ValueError("training images are all identical; no principal components")
    basis = xc.T @ eigvecs[:, :keep]
    basis /= np.linalg.norm(basis, axis=0)
    return IdentityProjector(mean=mean, basis=basis, source_dims=(shape[1], shape[0]))


def identity_similarity(
    result: ImageStack | ImagePlane, gt: ImageStack | ImagePlane, projector: IdentityProjector
) -> float:
    """Cosine similarity of the PCA coefficients; zero vectors map to 0."""
    u = projector.project(result)
    v = projector.project(gt)
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def save_projector(path, projector: IdentityProjector) -> None:
    w, h = projector.source_dims
    write_tensors(
        path,
        {
            "mean": projector.mean.astype(np.float32),
            "basis": projector.basis.astype(np.float32),
            "dims": np.array([w, h], dtype=np.float32),
        },
    )


def load_projector(path) -> IdentityProjector:
    tensors = read_tensors(path)
    w, h = (int(v) for v in tensors["dims"])
    return IdentityProjector(
        mean=tensors["mean"].astype(np.float64),
        basis=tensors["basis"].astype(np.float64),
        source_dims=(w, h),
    )
