"""Exemplar-based detail synthesis: per-pixel K-NN patch search over HR
exemplar images, ridge regression of the matched patches onto the input
patch, and overlap-averaged reconstruction.

Search and regression operate on the luminance plane; the regressed
luminance is recombined with the input's chroma. The patch similarity is

    D = alpha * (1 - ncc) + (1 - alpha) * mean_abs_diff

with ncc the normalized cross-correlation. Patches whose centered energy
falls below ``ZERO_VAR_SSD`` are treated as zero-variance and get ncc = 0,
so flat-on-flat matching is decided by the absolute-difference term alone.

The search is exhaustive within a square region centered on the query
patch's own coordinates, one winner per exemplar image; ties are broken by
exemplar index, then row-major scan order. Candidate windows are scored
with integral-image statistics, so each window costs O(patch) for the
cross terms and O(1) for means and variances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError
from .image_core import (
    ColorSpace,
    ImagePlane,
    ImageStack,
    Patch,
    extract_patch,
    luma_recombine,
    rgb_to_luma,
)

__all__ = [
    "ZERO_VAR_SSD",
    "EnergyTerms",
    "ExemplarDB",
    "MatchCandidate",
    "MatchParams",
    "RegressionPatch",
    "knn_search",
    "map_patch",
    "patch_distance",
    "regress_image",
    "regress_patch",
    "regression_energy",
    "solve_regression",
]

# Threshold on the centered sum of squares below which a patch counts as
# textureless for the correlation term.
ZERO_VAR_SSD = 1e-12


@dataclass(frozen=True)
class MatchParams:
    """Knobs of the search/regression stage.

    ``lambda_`` defaults to the number of pixels in a patch.
    """

    alpha: float = 0.5
    k: int = 5
    patch_side: int = 20
    lambda_: float | None = None
    stride: int = 1
    search_radius: int = 10

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.patch_side < 1:
            raise ValueError(f"patch side must be >= 1, got {self.patch_side}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.search_radius < 0:
            raise ValueError(f"search radius must be >= 0, got {self.search_radius}")
        if self.lambda_ is None:
            object.__setattr__(self, "lambda_", float(self.patch_side**2))
        if self.lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {self.lambda_}")


def _luma_of(img: ImageStack | ImagePlane) -> ImagePlane:
    if isinstance(img, ImagePlane):
        return img
    if img.color_space is ColorSpace.RGB:
        return rgb_to_luma(img)
    if len(img.channels) == 1:
        return img.channels[0]
    raise ValueError("expected an RGB or single-channel stack")


def _gaussian_smooth(a: np.ndarray, sigma: float) -> np.ndarray:
    from .degrade import gen_gaussian_kernel
    from .image_core import convolve

    size = 2 * int(np.ceil(3 * sigma)) + 1
    k = gen_gaussian_kernel(size, sigma)
    return convolve(ImagePlane.from_array(a, clamp=True), k).data


class ExemplarDB:
    """Immutable collection of HR exemplars prepared for windowed search.

    ``smooth_search=True`` enables the frequency-transfer mode: candidates
    are matched and regressed against Gaussian-smoothed exemplar planes
    while the transferred pixels come from the originals. The default mode
    uses the original planes for both.
    """

    def __init__(
        self,
        images: list[ImageStack | ImagePlane],
        patch_side: int = 20,
        search_radius: int = 10,
        smooth_search: bool = False,
        smooth_sigma: float = 1.5,
    ):
        if not images:
            raise ConfigurationError("exemplar database needs at least one image")
        self.patch_side = patch_side
        self.search_radius = search_radius
        self.smooth_search = smooth_search
        self.stacks = tuple(
            img if isinstance(img, ImageStack) else ImageStack((img,), ColorSpace.LUMA)
            for img in images
        )
        self.planes = tuple(_luma_of(img) for img in images)
        h, w = self.planes[0].shape
        for p in self.planes:
            if p.shape != (h, w):
                raise ConfigurationError("all exemplar images must share one resolution")
        self.height, self.width = h, w
        if smooth_search:
            self.search_planes = tuple(
                ImagePlane.from_array(_gaussian_smooth(p.data, smooth_sigma), clamp=True)
                for p in self.planes
            )
        else:
            self.search_planes = self.planes
        # integral images of values and squares for O(1) window stats
        self._sat = tuple(_sat(p.data) for p in self.search_planes)
        self._sat_sq = tuple(_sat(p.data * p.data) for p in self.search_planes)
        self._stats_cache: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}

    def __len__(self) -> int:
        return len(self.planes)

    def window_stats(self, side: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-exemplar (mean, centered-sum-of-squares) for every window."""
        if side not in self._stats_cache:
            stats = []
            n = side * side
            for sat, sat_sq in zip(self._sat, self._sat_sq):
                total = _window_totals(sat, side)
                total_sq = _window_totals(sat_sq, side)
                mean = total / n
                ssd = total_sq - total * total / n
                stats.append((mean, ssd))
            self._stats_cache[side] = stats
        return self._stats_cache[side]


def _sat(a: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=out[1:, 1:])
    return out


def _window_totals(sat: np.ndarray, side: int) -> np.ndarray:
    """Sums over all side x side windows, indexed by top-left corner."""
    return (
        sat[side:, side:] - sat[:-side, side:] - sat[side:, :-side] + sat[:-side, :-side]
    )


@dataclass(frozen=True)
class MatchCandidate:
    """One search winner: where it came from and its pixel vectors."""

    exemplar: int
    center: tuple[int, int]
    distance: float
    values: np.ndarray  # search-plane pixels (flattened)
    hr_values: np.ndarray  # transfer-plane pixels (flattened)


@dataclass(frozen=True)
class RegressionPatch:
    """Intermediate state of one patch regression."""

    center: tuple[int, int]
    candidates: np.ndarray  # (n_pixels, k)
    matched_hr: np.ndarray  # (n_pixels, k)
    coeffs: np.ndarray  # (k,)
    output: np.ndarray  # (n_pixels,)


@dataclass(frozen=True)
class EnergyTerms:
    data: float
    reg: float
    total: float = field(init=False)

    def __post_init__(self):
        if self.data < 0 or self.reg < 0:
            raise ValueError("energy terms must be non-negative")
        object.__setattr__(self, "total", self.data + self.reg)


def patch_distance(a: Patch, b: Patch, alpha: float) -> float:
    """Blend of correlation and absolute-difference dissimilarity."""
    if a.side != b.side:
        raise ValueError(f"patch sides differ: {a.side} vs {b.side}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    av, bv = a.values, b.values
    n = av.size
    d_abs = float(np.abs(av - bv).mean())
    a_mean, b_mean = av.sum() / n, bv.sum() / n
    a_ssd = float((av * av).sum() - n * a_mean * a_mean)
    b_ssd = float((bv * bv).sum() - n * b_mean * b_mean)
    if a_ssd <= ZERO_VAR_SSD or b_ssd <= ZERO_VAR_SSD:
        ncc = 0.0
    else:
        ncc = float((av * bv).sum() - n * a_mean * b_mean) / np.sqrt(a_ssd * b_ssd)
    return alpha * (1.0 - ncc) + (1.0 - alpha) * d_abs


class _SearchContext:
    """Per-(db, side) precomputation shared across query centers."""

    def __init__(self, db: ExemplarDB, side: int):
        self.db = db
        self.side = side
        self.stats = db.window_stats(side)
        self.search_windows = [
            sliding_window_view(p.data, (side, side)) for p in db.search_planes
        ]
        self.hr_windows = [sliding_window_view(p.data, (side, side)) for p in db.planes]

    def best_per_exemplar(
        self, patch2d: np.ndarray, center: tuple[int, int], radius: int, alpha: float
    ):
        side = self.side
        n = side * side
        p_mean = patch2d.sum() / n
        p_ssd = float((patch2d * patch2d).sum() - n * p_mean * p_mean)
        cx, cy = center
        tx, ty = cx - side // 2, cy - side // 2  # query top-left
        x_lo = max(tx - radius, 0)
        x_hi = min(tx + radius, self.db.width - side)
        y_lo = max(ty - radius, 0)
        y_hi = min(ty + radius, self.db.height - side)
        if x_hi < x_lo or y_hi < y_lo:
            raise ValueError(
                f"search region for center {center} lies outside the exemplar images"
            )
        winners = []
        for idx in range(len(self.db)):
            windows = self.search_windows[idx][y_lo : y_hi + 1, x_lo : x_hi + 1]
            mean_w, ssd_w = (
                s[y_lo : y_hi + 1, x_lo : x_hi + 1] for s in self.stats[idx]
            )
            d_abs = np.abs(windows - patch2d).mean(axis=(2, 3))
            cross = np.tensordot(windows, patch2d, axes=([2, 3], [0, 1]))
            num = cross - n * mean_w * p_mean
            with np.errstate(invalid="ignore", divide="ignore"):
                ncc = num / np.sqrt(ssd_w * p_ssd)
            ncc = np.where((ssd_w <= ZERO_VAR_SSD) | (p_ssd <= ZERO_VAR_SSD), 0.0, ncc)
            dist = alpha * (1.0 - ncc) + (1.0 - alpha) * d_abs
            flat = int(np.argmin(dist))  # first minimum = scan-order tie-break
            wy, wx = divmod(flat, dist.shape[1])
            winners.append((float(dist[wy, wx]), idx, y_lo + wy, x_lo + wx))
        return winners


def _search(
    ctx: _SearchContext, patch: Patch, params: MatchParams
) -> list[MatchCandidate]:
    if params.k > len(ctx.db):
        raise ConfigurationError(
            f"k={params.k} exceeds the {len(ctx.db)} exemplars in the database"
        )
    patch2d = patch.values.reshape(ctx.side, ctx.side)
    winners = ctx.best_per_exemplar(patch2d, patch.center, params.search_radius, params.alpha)
    winners.sort(key=lambda rec: (rec[0], rec[1]))  # distance, then exemplar index
    side = ctx.side
    out = []
    for dist, idx, wy, wx in winners[: params.k]:
        out.append(
            MatchCandidate(
                exemplar=idx,
                center=(wx + side // 2, wy + side // 2),
                distance=dist,
                values=ctx.search_windows[idx][wy, wx].ravel().copy(),
                hr_values=ctx.hr_windows[idx][wy, wx].ravel().copy(),
            )
        )
    return out


def knn_search(
    db: ExemplarDB,
    base: ImagePlane,
    center: tuple[int, int],
    params: MatchParams,
) -> list[MatchCandidate]:
    """K best exemplar patches for the query window at ``center``.

    One winner is taken per exemplar image (a sliding-window minimum over
    the search region whose center matches the query's), then the K
    smallest-distance winners are returned.
    """
    patch = extract_patch(base, center, params.patch_side)
    return _search(_SearchContext(db, params.patch_side), patch, params)


def solve_regression(candidates: np.ndarray, target: np.ndarray, lambda_: float) -> np.ndarray:
    """Ridge coefficients (GtG + lambda*I)^-1 Gt t via a Cholesky solve.

    ``candidates`` holds one column per candidate vector.
    """
    h = np.asarray(candidates, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if h.ndim != 2 or h.shape[0] != t.size:
        raise ValueError(f"candidate matrix {h.shape} does not match target length {t.size}")
    if lambda_ <= 0:
        raise ValueError(f"lambda must be positive, got {lambda_}")
    k = h.shape[1]
    gram = h.T @ h + lambda_ * np.eye(k)
    rhs = h.T @ t
    chol = np.linalg.cholesky(gram)
    coeffs = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    # lambda > 0 bounds the solution: ||f|| <= ||Ht t|| / lambda
    assert float(np.linalg.norm(coeffs)) <= float(np.linalg.norm(rhs)) / lambda_ * (1 + 1e-9)
    return coeffs


def regression_energy(
    candidates: np.ndarray, coeffs: np.ndarray, target: np.ndarray, lambda_: float
) -> EnergyTerms:
    """Data and regularization terms of the ridge objective."""
    h = np.asarray(candidates, dtype=np.float64)
    f = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    resid = h @ f - t
    return EnergyTerms(data=float(resid @ resid), reg=float(lambda_ * (f @ f)))


def map_patch(matched_hr: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Weighted sum of the matched HR patch vectors."""
    h = np.asarray(matched_hr, dtype=np.float64)
    f = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if h.ndim != 2 or h.shape[1] != f.size:
        raise ValueError(f"{h.shape[1] if h.ndim == 2 else '?'} candidates vs {f.size} coeffs")
    return h @ f


def regress_patch(
    ctx_or_db, base: ImagePlane, center: tuple[int, int], params: MatchParams
) -> RegressionPatch:
    """Search, solve, and map one patch; accepts a db or a search context."""
    ctx = ctx_or_db if isinstance(ctx_or_db, _SearchContext) else _SearchContext(
        ctx_or_db, params.patch_side
    )
    patch = extract_patch(base, center, params.patch_side)
    cands = _search(ctx, patch, params)
    h = np.column_stack([c.values for c in cands])
    h_bar = np.column_stack([c.hr_values for c in cands])
    coeffs = solve_regression(h, patch.values, params.lambda_)
    return RegressionPatch(
        center=center,
        candidates=h,
        matched_hr=h_bar,
        coeffs=coeffs,
        output=map_patch(h_bar, coeffs),
    )


def patch_centers(width: int, height: int, side: int, stride: int) -> list[tuple[int, int]]:
    """Row-major centers whose windows lie fully inside a width x height image."""
    m = side // 2
    xs = range(m, width - side + m + 1, stride)
    ys = range(m, height - side + m + 1, stride)
    return [(x, y) for y in ys for x in xs]


def regress_image(
    db: ExemplarDB, base: ImageStack | ImagePlane, params: MatchParams
) -> ImageStack:
    """Regressed image: per-center patch regression with overlap averaging.

    Pixels never covered by a patch window (the border ring, or gaps at
    stride > 1) keep the base image's values.
    """
    base_luma = _luma_of(base)
    if base_luma.shape != (db.height, db.width):
        raise ConfigurationError(
            f"base resolution {base_luma.shape} does not match exemplars "
            f"{(db.height, db.width)}"
        )
    ctx = _SearchContext(db, params.patch_side)
    acc = np.zeros(base_luma.shape, dtype=np.float64)
    count = np.zeros(base_luma.shape, dtype=np.float64)
    side = params.patch_side
    m = side // 2
    centers = patch_centers(db.width, db.height, side, params.stride)
    for cx, cy in centers:
        rp = regress_patch(ctx, base_luma, (cx, cy), params)
        y0, x0 = cy - m, cx - m
        acc[y0 : y0 + side, x0 : x0 + side] += rp.output.reshape(side, side)
        count[y0 : y0 + side, x0 : x0 + side] += 1.0
    covered = count > 0
    out = np.where(covered, acc / np.maximum(count, 1.0), base_luma.data)
    reg_luma = ImagePlane.from_array(out, clamp=True)
    if isinstance(base, ImageStack) and base.color_space is ColorSpace.RGB:
        return luma_recombine(reg_luma, base)
    return ImageStack((reg_luma,), ColorSpace.LUMA)
