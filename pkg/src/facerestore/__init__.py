"""Joint face super-resolution and deblurring.

A two-stage engine: a mask-guided dilated residual CNN produces a base
image with the right facial structure, then exemplar patches are matched,
ridge-regressed onto the base image, and their high frequencies merged
back in with a guided filter. Includes the synthetic degradation and
evaluation tooling needed to exercise the pipeline end to end.
"""

from .detail_transfer import GuidedFilterParams, guided_filter, transfer_details
from .degrade import DegradeSpec, degrade, gen_gaussian_kernel, gen_motion_kernel
from .exemplar import (
    ExemplarDB,
    MatchParams,
    knn_search,
    map_patch,
    patch_distance,
    regress_image,
    solve_regression,
)
from .face_masks import (
    FacialMaskSet,
    LandmarkSet,
    parse_landmarks,
    perturb_masks,
    rasterize_masks,
)
from .image_core import (
    ColorSpace,
    ImagePlane,
    ImageStack,
    Kernel2D,
    Patch,
    bicubic_resize,
    box_filter,
    convolve,
    extract_patch,
    luma_recombine,
    rgb_to_luma,
)
from .metrics import build_projector, identity_similarity, psnr, ssim
from .pipeline import PipelineConfig, Restorer
from .structnet import (
    StructureNet,
    build_structure_net,
    euclidean_loss,
    forward,
    load_weights,
    save_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ColorSpace",
    "DegradeSpec",
    "ExemplarDB",
    "FacialMaskSet",
    "GuidedFilterParams",
    "ImagePlane",
    "ImageStack",
    "Kernel2D",
    "LandmarkSet",
    "MatchParams",
    "Patch",
    "PipelineConfig",
    "Restorer",
    "StructureNet",
    "bicubic_resize",
    "box_filter",
    "build_projector",
    "build_structure_net",
    "convolve",
    "degrade",
    "euclidean_loss",
    "extract_patch",
    "forward",
    "gen_gaussian_kernel",
    "gen_motion_kernel",
    "guided_filter",
    "identity_similarity",
    "knn_search",
    "load_weights",
    "luma_recombine",
    "map_patch",
    "parse_landmarks",
    "patch_distance",
    "perturb_masks",
    "psnr",
    "rasterize_masks",
    "regress_image",
    "rgb_to_luma",
    "save_weights",
    "solve_regression",
    "ssim",
    "transfer_details",
]
