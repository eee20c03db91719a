"""Facial landmark parsing and binary component-mask rasterization.

Masks mark the four component regions (eyebrows, eyes, nose, mouth) as the
dilated convex hull of each landmark group; paired components share one
mask. The landmark file format is plain text:

    layout: 68pt        (optional header)
    68                  (point count)
    123.5 88.0          (one "x y" pair per line, sub-pixel allowed)

The default ``68pt`` layout follows the common 68-point indexing: jaw
0-16, eyebrows 17-26, nose 27-35, eyes 36-47, mouth 48-67.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .image_core import ImagePlane

__all__ = [
    "COMPONENT_NAMES",
    "DILATION_RADIUS",
    "LAYOUTS",
    "FacialMaskSet",
    "LandmarkSet",
    "convex_hull",
    "parse_landmarks",
    "perturb_masks",
    "rasterize_masks",
]

log = logging.getLogger(__name__)

COMPONENT_NAMES = ("eyebrows", "eyes", "nose", "mouth")

# Component groups as point-index ranges, per layout.
LAYOUTS: dict[str, dict[str, tuple[int, int]] | None] = {
    "68pt": {
        "eyebrows": (17, 27),
        "eyes": (36, 48),
        "nose": (27, 36),
        "mouth": (48, 68),
    },
    "raw": None,  # ungrouped points, parse-only
}

DILATION_RADIUS = 3  # px margin added around each component hull


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered sub-pixel landmark coordinates in upsampled-image space."""

    points: np.ndarray  # (n, 2) float64, columns x, y
    layout: str = "68pt"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        groups = LAYOUTS.get(self.layout, "missing")
        if groups == "missing":
            raise ValueError(f"unknown landmark layout {self.layout!r}")
        if self.layout == "68pt" and len(p) != 68:
            raise ValueError(f"68pt layout requires 68 points, got {len(p)}")

    def __len__(self) -> int:
        return len(self.points)

    def group(self, name: str) -> np.ndarray:
        groups = LAYOUTS[self.layout]
        if groups is None:
            raise ValueError(f"layout {self.layout!r} defines no component groups")
        lo, hi = groups[name]
        return self.points[lo:hi]

    def clamped(self, width: int, height: int) -> tuple["LandmarkSet", int]:
        """Clamp points into image bounds; returns the clamp count."""
        clipped = np.clip(self.points, [0.0, 0.0], [width - 1.0, height - 1.0])
        n_clamped = int((clipped != self.points).any(axis=1).sum())
        return LandmarkSet(clipped, self.layout), n_clamped

    def translated(self, dx: float, dy: float) -> "LandmarkSet":
        return LandmarkSet(self.points + np.array([dx, dy]), self.layout)


@dataclass(frozen=True)
class FacialMaskSet:
    """Four binary masks sharing the upsampled input's dimensions."""

    eyebrows: ImagePlane
    eyes: ImagePlane
    nose: ImagePlane
    mouth: ImagePlane
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        shape = self.eyebrows.shape
        for name in COMPONENT_NAMES:
            plane = getattr(self, name)
            if plane.shape != shape:
                raise ValueError("all masks must share dimensions")
            if not np.isin(plane.data, (0.0, 1.0)).all():
                raise ValueError(f"mask {name!r} contains values other than 0 and 1")

    def __iter__(self):
        return iter(getattr(self, n) for n in COMPONENT_NAMES)

    @property
    def shape(self) -> tuple[int, int]:
        return self.eyebrows.shape


def parse_landmarks(text: str, layout: str | None = None) -> LandmarkSet:
    """Parse a landmark file; see the module docstring for the format."""
    lines = text.splitlines()
    idx = 0
    declared_layout = None
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx < len(lines) and lines[idx].strip().lower().startswith("layout:"):
        declared_layout = lines[idx].split(":", 1)[1].strip()
        idx += 1
    if idx >= len(lines):
        raise ParseError("missing point count", idx + 1)
    head = lines[idx].strip()
    try:
        n_points = int(head)
    except ValueError:
        raise ParseError(f"expected point count, got {head!r}", idx + 1) from None
    if n_points < 1:
        raise ParseError(f"point count must be positive, got {n_points}", idx + 1)
    idx += 1

    points = []
    for k in range(n_points):
        line_no = idx + k + 1
        if idx + k >= len(lines) or not lines[idx + k].strip():
            raise ParseError(f"expected {n_points} points, found {k}", line_no)
        tokens = lines[idx + k].split()
        if len(tokens) != 2:
            raise ParseError(f"expected 'x y', got {lines[idx + k]!r}", line_no)
        try:
            x, y = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {lines[idx + k]!r}", line_no) from None
        if not (math.isfinite(x) and math.isfinite(y)) or x < 0 or y < 0:
            raise ParseError(f"coordinate out of range: {x} {y}", line_no)
        points.append((x, y))

    chosen = layout or declared_layout or ("68pt" if n_points == 68 else "raw")
    if chosen == "68pt" and n_points != 68:
        raise ParseError(f"layout 68pt requires 68 points, file declares {n_points}", 1)
    return LandmarkSet(np.array(points, dtype=np.float64), chosen)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise convex hull (y down) via Andrew's monotone chain.

    Returns the hull vertices, or fewer than 3 points when the input is
    degenerate (collinear or too few distinct points).
    """
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _fill_hull(hull: np.ndarray, width: int, height: int) -> np.ndarray:
    """Boolean raster of lattice points inside or on the convex hull."""
    mask = np.zeros((height, width), dtype=bool)
    if len(hull) < 3:
        return mask
    x0 = max(int(math.floor(hull[:, 0].min())), 0)
    x1 = min(int(math.ceil(hull[:, 0].max())), width - 1)
    y0 = max(int(math.floor(hull[:, 1].min())), 0)
    y1 = min(int(math.ceil(hull[:, 1].max())), height - 1)
    if x1 < x0 or y1 < y0:
        return mask
    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    inside = np.ones(xs.shape, dtype=bool)
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        # interior lies to the numeric left of every edge of the CCW hull
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        inside &= cross >= -1e-9
    mask[y0 : y1 + 1, x0 : x1 + 1] = inside
    return mask


def _disk_offsets(radius: int) -> list[tuple[int, int]]:
    offsets = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                offsets.append((dx, dy))
    return offsets


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a Euclidean disk structuring element."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    for dx, dy in _disk_offsets(radius):
        src_y = slice(max(0, -dy), min(h, h - dy))
        src_x = slice(max(0, -dx), min(w, w - dx))
        dst_y = slice(max(0, dy), min(h, h + dy))
        dst_x = slice(max(0, dx), min(w, w + dx))
        out[dst_y, dst_x] |= mask[src_y, src_x]
    return out


def rasterize_masks(lm: LandmarkSet, width: int, height: int) -> FacialMaskSet:
    """Fill each component group's convex hull and dilate by a 3 px margin."""
    clamped, n_clamped = lm.clamped(width, height)
    warnings = []
    if n_clamped:
        warnings.append(f"{n_clamped} landmark(s) clamped into {width}x{height} bounds")
    planes = {}
    for name in COMPONENT_NAMES:
        hull = convex_hull(clamped.group(name))
        if len(hull) < 3:
            warnings.append(f"degenerate {name} group: mask left empty")
            log.warning("degenerate %s landmark group, mask left empty", name)
            planes[name] = ImagePlane(np.zeros((height, width)))
            continue
        filled = dilate(_fill_hull(hull, width, height), DILATION_RADIUS)
        planes[name] = ImagePlane(filled.astype(np.float64))
    return FacialMaskSet(warnings=tuple(warnings), **planes)


def perturb_masks(masks: FacialMaskSet, deviation: float, seed: int) -> FacialMaskSet:
    """Translate each mask by a seeded random vector of the given magnitude.

    The displacement is rounded to integer pixels; content shifted past the
    border is clipped away.
    """
    if deviation < 0:
        raise ValueError(f"deviation must be >= 0, got {deviation}")
    if deviation == 0:
        return masks
    rng = np.random.default_rng(seed)
    planes = {}
    for name in COMPONENT_NAMES:
        angle = rng.uniform(0.0, 2.0 * math.pi)
        dx = int(round(deviation * math.cos(angle)))
        dy = int(round(deviation * math.sin(angle)))
        data = getattr(masks, name).data
        shifted = np.zeros_like(data)
        h, w = data.shape
        src_y = slice(max(0, -dy), min(h, h - dy))
        src_x = slice(max(0, -dx), min(w, w - dx))
        dst_y = slice(max(0, dy), min(h, h + dy))
        dst_x = slice(max(0, dx), min(w, w + dx))
        shifted[dst_y, dst_x] = data[src_y, src_x]
        planes[name] = ImagePlane(shifted)
    return FacialMaskSet(warnings=masks.warnings, **planes)
