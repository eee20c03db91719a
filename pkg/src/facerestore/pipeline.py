"""End-to-end restoration pipeline and the ablation/evaluation harness.

Restoration runs: bicubic x4 upsample -> component masks -> structure
network -> exemplar regression -> detail transfer. Each stage's output is
exposed so the CLI can dump intermediates and so stages can run in
isolation (the base image is quantized to the 8-bit grid before
enhancement, which makes a file-based two-step run reproduce the one-shot
run exactly).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import structnet
from .degrade import DegradeSpec, degrade
from .detail_transfer import GuidedFilterParams, guided_filter, transfer_details
from .errors import ConfigurationError
from .exemplar import ExemplarDB, MatchParams, regress_image
from .face_masks import FacialMaskSet, LandmarkSet, perturb_masks, rasterize_masks
from .image_core import (
    ColorSpace,
    ImagePlane,
    ImageStack,
    bicubic_resize,
    rgb_to_luma,
)
from .metrics import build_projector, identity_similarity, psnr, ssim

__all__ = [
    "PipelineConfig",
    "RestoreResult",
    "Restorer",
    "ablate",
    "draw_degrade_spec",
    "evaluate_pairs",
]

STAGES = ("full", "base", "enhance")


@dataclass(frozen=True)
class PipelineConfig:
    """Validated bundle of everything a restoration run needs."""

    weights: str | None = None
    exemplar_dir: str | None = None
    match: MatchParams = MatchParams()
    gf: GuidedFilterParams = GuidedFilterParams()
    scale: int = 4
    stage: str = "full"
    mask_deviation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigurationError(f"stage must be one of {STAGES}, got {self.stage!r}")
        if self.scale < 1:
            raise ConfigurationError(f"scale must be >= 1, got {self.scale}")
        if self.stage in ("full", "base") and self.weights is None:
            raise ConfigurationError(f"stage {self.stage!r} needs a weights file")
        if self.weights is not None and not Path(self.weights).exists():
            raise ConfigurationError(f"weights file not found: {self.weights}")
        if self.stage in ("full", "enhance") and self.exemplar_dir is None:
            raise ConfigurationError(f"stage {self.stage!r} needs an exemplar directory")


@dataclass(frozen=True)
class RestoreResult:
    output: ImageStack
    upsampled: ImageStack | None = None
    masks: FacialMaskSet | None = None
    base: ImageStack | None = None
    regressed: ImageStack | None = None
    filtered_base: ImagePlane | None = None
    detail: ImagePlane | None = None


def _quantize(img: ImageStack) -> ImageStack:
    """Snap to the 8-bit grid (what a PNG round-trip would produce)."""
    arr = np.rint(np.clip(img.as_array(), 0.0, 1.0) * 255.0) / 255.0
    return ImageStack.from_array(arr, img.color_space)


class Restorer:
    """Holds the loaded network and exemplar database across images."""

    def __init__(
        self,
        net: structnet.StructureNet | None,
        db: ExemplarDB | None,
        match: MatchParams = MatchParams(),
        gf: GuidedFilterParams = GuidedFilterParams(),
        scale: int = 4,
    ):
        self.net = net
        self.db = db
        self.match = match
        self.gf = gf
        self.scale = scale

    def base_stage(
        self,
        lr: ImageStack,
        landmarks: LandmarkSet,
        mask_deviation: float = 0.0,
        mask_seed: int = 0,
    ) -> RestoreResult:
        if self.net is None:
            raise ConfigurationError("no network weights loaded; cannot run the base stage")
        up = bicubic_resize(lr, self.scale)
        masks = rasterize_masks(landmarks, up.width, up.height)
        if mask_deviation > 0:
            masks = perturb_masks(masks, mask_deviation, mask_seed)
        base = _quantize(structnet.forward(self.net, up, masks))
        return RestoreResult(output=base, upsampled=up, masks=masks, base=base)

    def enhance_stage(self, base: ImageStack, db: ExemplarDB | None = None) -> RestoreResult:
        db = db or self.db
        if db is None:
            raise ConfigurationError("no exemplar database; cannot run the enhance stage")
        regressed = regress_image(db, base, self.match)
        output = transfer_details(base, regressed, self.gf)
        reg_luma = rgb_to_luma(regressed) if regressed.color_space is ColorSpace.RGB else regressed.channels[0]
        base_luma = rgb_to_luma(base) if base.color_space is ColorSpace.RGB else base.channels[0]
        filtered_base = guided_filter(base_luma, reg_luma, self.gf)
        smoothed_reg = guided_filter(reg_luma, reg_luma, self.gf)
        detail = ImagePlane.from_array(
            0.5 + (reg_luma.data - smoothed_reg.data), clamp=True
        )
        return RestoreResult(
            output=output,
            base=base,
            regressed=regressed,
            filtered_base=filtered_base,
            detail=detail,
        )

    def restore(
        self,
        lr: ImageStack,
        landmarks: LandmarkSet,
        mask_deviation: float = 0.0,
        mask_seed: int = 0,
        db: ExemplarDB | None = None,
    ) -> RestoreResult:
        first = self.base_stage(lr, landmarks, mask_deviation, mask_seed)
        second = self.enhance_stage(first.base, db=db)
        return RestoreResult(
            output=second.output,
            upsampled=first.upsampled,
            masks=first.masks,
            base=first.base,
            regressed=second.regressed,
            filtered_base=second.filtered_base,
            detail=second.detail,
        )


def draw_degrade_spec(rng: np.random.Generator, scale: int = 4) -> DegradeSpec:
    """One random degradation: kind, odd size in [11, 31], sigma in [1.4, 1.7]."""
    kind = "motion" if rng.integers(0, 2) else "gaussian"
    size = int(rng.integers(5, 16)) * 2 + 1  # odd in [11, 31]
    sigma = float(rng.uniform(1.4, 1.7))
    seed = int(rng.integers(0, 200))
    return DegradeSpec(
        kernel_kind=kind, kernel_size=size, gaussian_sigma=sigma,
        scale_factor=scale, rng_seed=seed,
    )


@dataclass(frozen=True)
class AblationSample:
    """One test item: ground truth, its landmarks, and its degradation."""

    hr: ImageStack
    landmarks: LandmarkSet
    spec: DegradeSpec
    name: str = ""


def ablate(
    restorer: Restorer,
    samples: list[AblationSample],
    axis: str,
    values: list[float],
    mask_seed: int = 0,
) -> list[dict]:
    """Sweep one parameter and report mean PSNR/SSIM per value."""
    if axis not in ("patch_size", "k", "mask_deviation"):
        raise ConfigurationError(f"unknown ablation axis {axis!r}")
    if not samples:
        raise ConfigurationError("ablation needs a non-empty test set")
    if not values:
        raise ConfigurationError("ablation needs at least one sweep value")
    rows = []
    for value in values:
        match = restorer.match
        deviation = 0.0
        if axis == "patch_size":
            match = replace(match, patch_side=int(value), lambda_=None)
        elif axis == "k":
            match = replace(match, k=int(value))
        else:
            deviation = float(value)
        sweep = Restorer(restorer.net, restorer.db, match, restorer.gf, restorer.scale)
        psnrs, ssims = [], []
        for sample in samples:
            lr = degrade(sample.hr, sample.spec)
            result = sweep.restore(
                lr, sample.landmarks, mask_deviation=deviation, mask_seed=mask_seed
            )
            psnrs.append(psnr(result.output, sample.hr))
            ssims.append(
                ssim(rgb_to_luma(result.output), rgb_to_luma(sample.hr))
            )
        rows.append(
            {
                "axis": axis,
                "value": value,
                "psnr": float(np.mean(psnrs)),
                "ssim": float(np.mean(ssims)),
                "n": len(samples),
            }
        )
    return rows


def ablation_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["axis", "value", "psnr", "ssim", "n"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def evaluate_pairs(
    pairs: list[tuple[str, ImageStack, ImageStack]],
    projector_images: list[ImageStack] | None = None,
) -> list[dict]:
    """Per-image PSNR/SSIM (and identity when a projector set is given)."""
    if not pairs:
        raise ConfigurationError("nothing to evaluate")
    projector = build_projector(projector_images) if projector_images else None
    rows = []
    for name, result, truth in pairs:
        row = {
            "name": name,
            "psnr": psnr(result, truth),
            "ssim": ssim(rgb_to_luma(result), rgb_to_luma(truth))
            if result.color_space is ColorSpace.RGB
            else ssim(result.channels[0], truth.channels[0]),
        }
        if projector is not None:
            row["identity"] = identity_similarity(result, truth, projector)
        rows.append(row)
    mean_row = {"name": "mean"}
    for key in rows[0]:
        if key != "name":
            mean_row[key] = float(np.mean([r[key] for r in rows]))
    rows.append(mean_row)
    return rows
