"""Command-line interface.

Subcommands: degrade, masks, restore, evaluate, ablate, kernels.
Exit codes: 0 ok, 2 configuration error, 3 data error, 4 internal
invariant violation.

Flags can be preloaded from a key=value config file via --config; flags
given on the command line override the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import structnet
from .degrade import DegradeSpec, degrade, gen_motion_kernel
from .detail_transfer import GuidedFilterParams
from .errors import ConfigurationError, DataError, FaceRestoreError
from .exemplar import ExemplarDB, MatchParams
from .face_masks import COMPONENT_NAMES, parse_landmarks, perturb_masks, rasterize_masks
from .image_core import ColorSpace, ImagePlane, ImageStack
from .imageio import read_image, write_image, write_plane
from .pipeline import (
    AblationSample,
    Restorer,
    ablate,
    ablation_csv,
    draw_degrade_spec,
    evaluate_pairs,
)


def _load_landmarks(path: Path):
    return parse_landmarks(Path(path).read_text())


def _load_exemplar_db(directory: str, match: MatchParams) -> ExemplarDB:
    paths = sorted(Path(directory).glob("*.png")) + sorted(Path(directory).glob("*.ppm"))
    if not paths:
        raise ConfigurationError(f"no exemplar images (*.png, *.ppm) in {directory}")
    return ExemplarDB(
        [read_image(p) for p in paths],
        patch_side=match.patch_side,
        search_radius=match.search_radius,
    )


def _match_params(args) -> MatchParams:
    lam = None if args.lambda_ in (None, "auto") else float(args.lambda_)
    return MatchParams(
        alpha=args.alpha,
        k=args.k,
        patch_side=args.patch_side,
        lambda_=lam,
        stride=args.stride,
        search_radius=args.search_radius,
    )


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--patch-side", type=int, default=20)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--search-radius", type=int, default=10)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--lambda", dest="lambda_", default="auto",
                   help="ridge weight; 'auto' = patch pixel count")
    p.add_argument("--gf-radius", type=int, default=8)
    p.add_argument("--gf-eps", type=float, default=1e-3)


def cmd_degrade(args) -> int:
    hr = read_image(args.input)
    spec = DegradeSpec(
        kernel_kind=args.kind,
        kernel_size=args.size,
        gaussian_sigma=args.sigma,
        scale_factor=args.scale,
        rng_seed=args.seed,
    )
    lr = degrade(hr, spec)
    write_image(args.out, lr)
    if args.save_kernel:
        taps = spec.kernel().taps
        write_plane(args.save_kernel, ImagePlane.from_array(taps / taps.max(), clamp=True))
    print(f"degraded {args.input} -> {args.out} "
          f"({spec.kernel_kind}, size {spec.kernel_size}, scale {spec.scale_factor})")
    return 0


def cmd_masks(args) -> int:
    lm = _load_landmarks(args.landmarks)
    masks = rasterize_masks(lm, args.width, args.height)
    if args.deviation > 0:
        masks = perturb_masks(masks, args.deviation, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in COMPONENT_NAMES:
        write_plane(out_dir / f"{name}.pgm", getattr(masks, name))
    for warning in masks.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {len(COMPONENT_NAMES)} masks to {out_dir}")
    return 0


def cmd_kernels(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bank = []
    for seed in range(args.count):
        kernel = gen_motion_kernel(args.size, seed)
        bank.append(kernel.taps)
        if args.format == "pgm":
            scaled = kernel.taps / kernel.taps.max()
            write_plane(out_dir / f"kernel_{seed:03d}.pgm", ImagePlane.from_array(scaled, clamp=True))
    if args.format == "npy":
        np.save(out_dir / "kernels.npy", np.stack(bank))
    print(f"wrote {args.count} motion kernels (size {args.size}) to {out_dir}")
    return 0


def cmd_restore(args) -> int:
    match = _match_params(args)
    gf = GuidedFilterParams(radius=args.gf_radius, epsilon=args.gf_eps)
    net = structnet.load_weights(args.weights) if args.weights else None
    db = _load_exemplar_db(args.exemplar_dir, match) if args.exemplar_dir else None
    restorer = Restorer(net, db, match, gf, scale=args.scale)

    image = read_image(args.input)
    if args.stage == "enhance":
        result = restorer.enhance_stage(image)
    else:
        if not args.landmarks:
            raise ConfigurationError("stages 'full' and 'base' need --landmarks")
        lm = _load_landmarks(args.landmarks)
        if args.stage == "base":
            result = restorer.base_stage(image, lm, args.mask_deviation, args.seed)
        else:
            if db is None:
                raise ConfigurationError("stage 'full' needs --exemplar-dir")
            result = restorer.restore(image, lm, args.mask_deviation, args.seed)

    write_image(args.out, result.output)
    if args.dump_base_npy and result.base is not None:
        np.save(args.dump_base_npy, result.base.as_array())
    if args.save_intermediates:
        stem = Path(args.out).with_suffix("")
        panels = {
            "base": result.base,
            "regressed": result.regressed,
            "filtered-base": result.filtered_base,
            "detail": result.detail,
        }
        for name, img in panels.items():
            if img is None:
                continue
            if isinstance(img, ImagePlane):
                img = ImageStack((img,), ColorSpace.LUMA)
            write_image(f"{stem}.{name}.png", img)
    print(f"restored {args.input} -> {args.out} (stage {args.stage})")
    return 0


def cmd_evaluate(args) -> int:
    result_dir, truth_dir = Path(args.results), Path(args.truth)
    pairs = []
    for result_path in sorted(result_dir.glob("*.png")):
        truth_path = truth_dir / result_path.name
        if not truth_path.exists():
            raise DataError(f"no ground truth for {result_path.name} in {truth_dir}")
        pairs.append((result_path.stem, read_image(result_path), read_image(truth_path)))
    projector_images = None
    if args.projector_training:
        projector_images = [
            read_image(p) for p in sorted(Path(args.projector_training).glob("*.png"))
        ]
    rows = evaluate_pairs(pairs, projector_images)
    lines = [",".join(rows[0].keys())]
    for row in rows:
        lines.append(",".join(str(v) for v in row.values()))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def cmd_ablate(args) -> int:
    match = _match_params(args)
    gf = GuidedFilterParams(radius=args.gf_radius, epsilon=args.gf_eps)
    net = structnet.load_weights(args.weights)
    db = _load_exemplar_db(args.exemplar_dir, match)
    restorer = Restorer(net, db, match, gf, scale=args.scale)

    hr_paths = sorted(Path(args.hr_dir).glob("*.png"))
    if not hr_paths:
        raise ConfigurationError(f"no *.png images in {args.hr_dir}")
    rng = np.random.default_rng(args.seed)
    samples = []
    for path in hr_paths:
        lm_path = path.with_suffix(".txt")
        if not lm_path.exists():
            raise DataError(f"no landmark file for {path.name} (expected {lm_path.name})")
        samples.append(
            AblationSample(
                hr=read_image(path),
                landmarks=_load_landmarks(lm_path),
                spec=draw_degrade_spec(rng, scale=args.scale),
                name=path.stem,
            )
        )
    values = [float(v) for v in args.values.split(",") if v.strip()]
    rows = ablate(restorer, samples, args.axis, values, mask_seed=args.seed)
    text = ablation_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facerestore",
        description="Joint face super-resolution and deblurring",
    )
    parser.add_argument("--config", help="key=value file; flags override its entries")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="blur and downsample a ground-truth image")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("motion", "gaussian"), default="gaussian")
    p.add_argument("--size", type=int, default=11)
    p.add_argument("--sigma", type=float, default=1.5)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-kernel", help="also write the kernel as a PGM")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("masks", help="rasterize component masks from landmarks")
    p.add_argument("--landmarks", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--deviation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_masks)

    p = sub.add_parser("kernels", help="export the motion-kernel bank")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, default=15)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--format", choices=("pgm", "npy"), default="pgm")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("restore", help="run the restoration pipeline")
    p.add_argument("--input", required=True, help="LR image (or base image for --stage enhance)")
    p.add_argument("--out", required=True)
    p.add_argument("--landmarks")
    p.add_argument("--weights")
    p.add_argument("--exemplar-dir")
    p.add_argument("--stage", choices=("full", "base", "enhance"), default="full")
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--mask-deviation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-intermediates", action="store_true")
    p.add_argument("--dump-base-npy", help="write the float base image as .npy")
    _add_match_flags(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("evaluate", help="PSNR/SSIM (and identity) against ground truth")
    p.add_argument("--results", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.add_argument("--projector-training", help="images for the identity projector")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep a parameter over a test set")
    p.add_argument("--axis", choices=("patch_size", "k", "mask_deviation"), required=True)
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--hr-dir", required=True, help="ground truths plus <name>.txt landmarks")
    p.add_argument("--exemplar-dir", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_match_flags(p)
    p.set_defaults(func=cmd_ablate)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load key=value defaults from a --config file, if given."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigurationError("--config needs a file path")
    path = Path(argv[idx + 1])
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    overrides = {}
    for line_no, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        overrides[key.replace("-", "_")] = value
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub in action.choices.values():
            known = {a.dest for a in sub._actions}  # noqa: SLF001
            sub.set_defaults(**{k: v for k, v in overrides.items() if k in known})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (FaceRestoreError, AssertionError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
