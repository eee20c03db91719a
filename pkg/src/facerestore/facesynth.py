"""Procedural face-like test images with known 68-point landmarks.

The renderer draws an elliptical head with eyebrows, eyes, nose, and mouth
whose geometry, colors, and fine texture (brow strokes, iris pattern, lip
striations, freckles) are jittered per seed. The same geometry yields the
landmark set, so component masks derived from it align with the drawing.

These are not faces; they are structured fixtures that give the pipeline
realistic work to do (aligned components, identity-specific high
frequencies) at desk scale.
"""

from __future__ import annotations

import math

import numpy as np

from .face_masks import LandmarkSet
from .image_core import ColorSpace, ImagePlane, ImageStack

__all__ = ["synth_face", "landmarks_text"]


def _smoothstep(e: np.ndarray, lo: float, hi: float) -> np.ndarray:
    t = np.clip((hi - e) / (hi - lo), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _blend(img: np.ndarray, alpha: np.ndarray, color: tuple[float, float, float]) -> None:
    for c in range(3):
        img[c] = img[c] * (1.0 - alpha) + color[c] * alpha


def synth_face(seed: int, size: int = 80) -> tuple[ImageStack, LandmarkSet]:
    """Render one synthetic face and its landmark set on a size x size canvas."""
    rng = np.random.default_rng(seed)
    u = lambda lo, hi: float(rng.uniform(lo, hi))

    cx = size * (0.50 + u(-0.02, 0.02))
    cy = size * (0.54 + u(-0.02, 0.02))
    fa = size * 0.340 * (1.0 + u(-0.07, 0.07))  # face half-width
    fb = size * 0.420 * (1.0 + u(-0.07, 0.07))  # face half-height
    eye_dx = fa * 0.45 * (1.0 + u(-0.08, 0.08))
    eye_y = cy - fb * 0.28 * (1.0 + u(-0.08, 0.08))
    eye_rx = fa * 0.24 * (1.0 + u(-0.08, 0.08))
    eye_ry = eye_rx * 0.55
    iris_r = eye_ry * 0.95
    brow_y = eye_y - eye_ry - fb * 0.12
    brow_half = eye_rx * 1.3
    brow_h = max(1.2, size * 0.022)
    nose_top = eye_y + eye_ry * 1.4
    nose_bot = cy + fb * 0.16
    nose_w = fa * 0.20
    mouth_y = cy + fb * 0.52
    mouth_rx = fa * 0.42 * (1.0 + u(-0.08, 0.08))
    mouth_ry = fb * 0.10 * (1.0 + u(-0.1, 0.1))

    skin = np.array([0.80, 0.62, 0.52]) * (1.0 + u(-0.08, 0.08))
    hair = np.array([0.16, 0.12, 0.10]) * (1.0 + u(-0.2, 0.4))
    iris_col = np.array([0.22, 0.32, 0.48]) * (1.0 + u(-0.2, 0.3))
    lip_col = np.array([0.66, 0.33, 0.34]) * (1.0 + u(-0.1, 0.1))

    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    img = np.zeros((3, size, size))

    # background: vertical gradient with a seeded tint
    grad = 0.18 + 0.20 * ys / size
    tint = rng.uniform(-0.03, 0.03, 3)
    for c in range(3):
        img[c] = grad + tint[c]

    # hair cap: larger ellipse behind the upper half of the head
    e_hair = ((xs - cx) / (fa * 1.12)) ** 2 + ((ys - (cy - fb * 0.18)) / (fb * 1.05)) ** 2
    _blend(img, _smoothstep(e_hair, 0.92, 1.0) * (ys < cy), tuple(hair))

    # head with radial shading, film grain, and freckles
    e_face = ((xs - cx) / fa) ** 2 + ((ys - cy) / fb) ** 2
    alpha_face = _smoothstep(e_face, 0.97, 1.03)
    shade = 1.0 - 0.18 * e_face
    grain = rng.normal(0.0, 0.012, (size, size))
    for c in range(3):
        img[c] = img[c] * (1.0 - alpha_face) + (skin[c] * shade + grain) * alpha_face
    for _ in range(24):
        px = cx + u(-0.8, 0.8) * fa
        py = cy + u(-0.1, 0.9) * fb * 0.8
        rr = (xs - px) ** 2 + (ys - py) ** 2
        _blend(img, alpha_face * np.exp(-rr / 1.4) * 0.25, tuple(skin * 0.72))

    # eyebrows: dark arcs with vertical hair strokes
    stroke_phase = u(0.0, math.tau)
    for side in (-1.0, 1.0):
        ex = cx + side * eye_dx
        arc = ((xs - ex) / brow_half) ** 2
        band = np.abs(ys - (brow_y - 2.2 * (1.0 - arc))) <= brow_h
        region = band & (arc <= 1.0)
        strokes = 0.55 + 0.45 * np.sin(xs * (math.tau / 2.3) + stroke_phase)
        _blend(img, region * (0.55 + 0.4 * strokes), tuple(hair * 0.9))

    # eyes: sclera, textured iris, pupil, catchlight
    iris_phase = u(0.0, math.tau)
    for side in (-1.0, 1.0):
        ex = cx + side * eye_dx
        e_eye = ((xs - ex) / eye_rx) ** 2 + ((ys - eye_y) / eye_ry) ** 2
        a_eye = _smoothstep(e_eye, 0.9, 1.1)
        _blend(img, a_eye, (0.93, 0.93, 0.90))
        rr = np.sqrt((xs - ex) ** 2 + (ys - eye_y) ** 2)
        ang = np.arctan2(ys - eye_y, xs - ex)
        radial = 1.0 + 0.25 * np.sin(9.0 * ang + iris_phase)
        a_iris = _smoothstep(rr, iris_r * 0.92, iris_r * 1.08) * a_eye
        for c in range(3):
            img[c] = img[c] * (1.0 - a_iris) + iris_col[c] * radial * a_iris
        a_pupil = _smoothstep(rr, iris_r * 0.38, iris_r * 0.5)
        _blend(img, a_pupil * a_eye, (0.05, 0.05, 0.06))
        hl = np.exp(-(((xs - (ex - iris_r * 0.3)) ** 2 + (ys - (eye_y - iris_r * 0.3)) ** 2) / 0.8))
        _blend(img, hl * a_eye * 0.8, (0.98, 0.98, 0.98))

    # nose: ridge shadow and nostrils
    ridge = np.exp(-((xs - cx - nose_w * 0.35) ** 2) / (2.0 * (nose_w * 0.35) ** 2))
    in_nose = (ys >= nose_top) & (ys <= nose_bot + 2.0)
    _blend(img, ridge * in_nose * 0.25, tuple(skin * 0.7))
    for side in (-1.0, 1.0):
        nx = cx + side * nose_w * 0.55
        rr = (xs - nx) ** 2 + ((ys - nose_bot) * 1.4) ** 2
        _blend(img, np.exp(-rr / 1.6) * 0.7, tuple(skin * 0.45))

    # mouth: lips with a dark center seam and vertical striations
    lip_phase = u(0.0, math.tau)
    e_mouth = ((xs - cx) / mouth_rx) ** 2 + ((ys - mouth_y) / mouth_ry) ** 2
    a_mouth = _smoothstep(e_mouth, 0.9, 1.1)
    stria = 1.0 + 0.16 * np.sin(xs * (math.tau / 2.6) + lip_phase)
    for c in range(3):
        img[c] = img[c] * (1.0 - a_mouth) + lip_col[c] * stria * a_mouth
    seam = np.abs(ys - mouth_y) <= 0.7
    _blend(img, seam * a_mouth * 0.8, tuple(lip_col * 0.45))

    stack = ImageStack.from_array(np.clip(img, 0.0, 1.0), ColorSpace.RGB)
    return stack, _landmarks(
        cx, cy, fa, fb, eye_dx, eye_y, eye_rx, eye_ry, brow_y, brow_half,
        nose_top, nose_bot, nose_w, mouth_y, mouth_rx, mouth_ry, size,
    )


def _landmarks(
    cx, cy, fa, fb, eye_dx, eye_y, eye_rx, eye_ry, brow_y, brow_half,
    nose_top, nose_bot, nose_w, mouth_y, mouth_rx, mouth_ry, size,
) -> LandmarkSet:
    pts: list[tuple[float, float]] = []
    # jaw 0-16: left temple around the chin to the right temple
    for phi in np.linspace(math.pi * 0.98, math.pi * 0.02, 17):
        pts.append((cx + fa * math.cos(phi), cy + fb * math.sin(phi)))
    # eyebrows 17-26
    for side in (-1.0, 1.0):
        ex = cx + side * eye_dx
        for t in np.linspace(-1.0, 1.0, 5):
            pts.append((ex + t * brow_half, brow_y - 2.2 * (1.0 - t * t)))
    # nose 27-35: bridge then nostril row
    for t in np.linspace(0.0, 1.0, 4):
        pts.append((cx, nose_top + t * (nose_bot - nose_top)))
    for t in np.linspace(-1.0, 1.0, 5):
        pts.append((cx + t * nose_w, nose_bot + 1.0))
    # eyes 36-47: hexagonal outline per eye
    for side in (-1.0, 1.0):
        ex = cx + side * eye_dx
        pts.extend(
            [
                (ex - eye_rx, eye_y),
                (ex - eye_rx * 0.45, eye_y - eye_ry),
                (ex + eye_rx * 0.45, eye_y - eye_ry),
                (ex + eye_rx, eye_y),
                (ex + eye_rx * 0.45, eye_y + eye_ry),
                (ex - eye_rx * 0.45, eye_y + eye_ry),
            ]
        )
    # mouth 48-67: 12 outer then 8 inner points
    for t in np.linspace(-1.0, 1.0, 7):  # 48-54 upper outer
        pts.append((cx + t * mouth_rx, mouth_y - mouth_ry * math.sqrt(max(0.0, 1 - t * t))))
    for t in np.linspace(0.66, -0.66, 5):  # 55-59 lower outer
        pts.append((cx + t * mouth_rx, mouth_y + mouth_ry * math.sqrt(max(0.0, 1 - t * t))))
    inner_rx, inner_ry = mouth_rx * 0.7, mouth_ry * 0.45
    for t in np.linspace(-1.0, 1.0, 5):  # 60-64 upper inner
        pts.append((cx + t * inner_rx, mouth_y - inner_ry * math.sqrt(max(0.0, 1 - t * t))))
    for t in (0.5, 0.0, -0.5):  # 65-67 lower inner
        pts.append((cx + t * inner_rx, mouth_y + inner_ry * math.sqrt(max(0.0, 1 - t * t))))
    arr = np.clip(np.array(pts), 0.0, [size - 1.0, size - 1.0])
    return LandmarkSet(arr, "68pt")


def landmarks_text(lm: LandmarkSet) -> str:
    """Landmark file representation (header, count, one point per line)."""
    lines = [f"layout: {lm.layout}", str(len(lm))]
    lines.extend(f"{x:.3f} {y:.3f}" for x, y in lm.points)
    return "\n".join(lines) + "\n"
