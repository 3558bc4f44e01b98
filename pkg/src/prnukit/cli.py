"""Command-line front end.

Exit codes: 0 on success, 1 on domain errors (bad data, incompatible
dimensions, unreadable files), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import glob as globlib
import json
import sys
from pathlib import Path

from .denoise import DenoiserSpec
from .evalharness import ExperimentConfig, ScoreRecord, build_dataset, run_evaluation
from .fingerprint import (
    SATURATION_THRESHOLD,
    clean_fingerprint,
    estimate_fingerprint,
    load_fingerprint,
    residual,
    save_fingerprint,
)
from .imaging import load_image, tile_patches, to_luminance
from .localization import pce_map, probability_map, render_map, save_map_json
from .matching import align, match_patch
from .errors import ShapeError


def _parse_denoiser(text: str) -> DenoiserSpec:
    """Parse "wavelet", "wavelet:VAR", or "gaussian:SIGMA"."""
    kind, _, param = text.partition(":")
    if kind == "wavelet":
        return DenoiserSpec("wavelet", noise_variance=float(param)) if param else DenoiserSpec("wavelet")
    if kind == "gaussian":
        return DenoiserSpec("gaussian", sigma=float(param)) if param else DenoiserSpec("gaussian")
    raise ValueError(f"unknown denoiser spec {text!r}")


def _parse_saturation(text: str):
    if text.lower() == "none":
        return None
    return float(text)


def cmd_estimate(args) -> int:
    paths = sorted(p for pattern in args.images for p in globlib.glob(pattern))
    if not paths:
        print(f"error: no files match {args.images}", file=sys.stderr)
        return 2
    denoiser = _parse_denoiser(args.denoiser)
    images = [to_luminance(load_image(p)) for p in paths]
    shape = images[0].shape
    for p, im in zip(paths, images):
        if im.shape != shape:
            raise ShapeError(
                f"{p}: shape {im.shape[::-1]} differs from {shape[::-1]}"
            )
    residuals = [residual(im, denoiser) for im in images]
    fp = estimate_fingerprint(
        images,
        residuals,
        camera_id=args.camera,
        pipeline_id=args.pipeline,
        saturation_threshold=args.saturation_threshold,
    )
    fp = clean_fingerprint(fp, whiten=args.whiten)
    save_fingerprint(fp, args.out)
    h, w = fp.plane.shape
    print(f"fingerprint {w}x{h} from {fp.n_sources} images -> {args.out}")
    return 0


def _score_line(score, origin, size) -> str:
    dx, dy = score.peak_location
    x, y = origin
    return (
        f"patch {size} @ ({x},{y}): pce {score.pce:.4f} "
        f"peak ({dx},{dy}) p {score.p_value:.3e}"
    )


def cmd_match(args) -> int:
    img = to_luminance(load_image(args.image))
    fp = load_fingerprint(args.fingerprint)
    denoiser = _parse_denoiser(args.denoiser)
    res = residual(img, denoiser)
    results = []
    if args.patch:
        grid = tile_patches(img, args.patch)
        rgrid = tile_patches(res, args.patch)
        for origin, pimg, pres in zip(grid.origins, grid.patches, rgrid.patches):
            score = match_patch(pimg, pres, fp, origin, args.exclusion_radius)
            results.append((origin, args.patch, score))
    else:
        score = match_patch(img, res, fp, (0, 0), args.exclusion_radius)
        results.append(((0, 0), img.shape[1], score))
    if args.json:
        for origin, size, score in results:
            record = ScoreRecord(
                camera_fp=fp.camera_id,
                camera_test="",
                pipeline_est=fp.pipeline_id,
                pipeline_test="",
                patch_size=size,
                origin=origin,
                image=str(args.image),
                pce=score.pce,
                peak_value=score.peak_value,
                peak=score.peak_location,
                p_value=score.p_value,
                label="unlabeled",
            )
            print(json.dumps(record.to_json(), sort_keys=True))
    else:
        for origin, size, score in results:
            print(_score_line(score, origin, size))
    return 0


def cmd_align(args) -> int:
    fa = load_fingerprint(args.a)
    fb = load_fingerprint(args.b)
    (dx, dy), corr = align(fa, fb, args.max_shift)
    print(f"shift {dx} {dy}, ncc {round(float(corr), 6)}")
    return 0


def cmd_localize(args) -> int:
    img = to_luminance(load_image(args.image))
    fp = load_fingerprint(args.fingerprint)
    denoiser = _parse_denoiser(args.denoiser)
    pmap = pce_map(img, fp, args.window, args.stride, denoiser)
    prob = probability_map(pmap)
    render_map(prob, args.out_map, postprocess=args.postprocess)
    if args.json_map:
        save_map_json(prob, args.json_map)
    rows, cols = prob.shape
    print(f"probability map {cols}x{rows} (window {args.window}, stride {args.stride}) -> {args.out_map}")
    return 0


def _resolve_out(args, config) -> str:
    out = args.out or config.output_dir
    if not out:
        print("error: no output directory (pass --out or set output_dir in the config)", file=sys.stderr)
        raise SystemExit(2)
    return out


def cmd_simulate(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    manifest = build_dataset(config, _resolve_out(args, config))
    n_images = sum(
        len(manifest.image_paths(cam, pid, split))
        for cam in manifest.cameras
        for pid in manifest.pipeline_ids
        for split in ("estimation", "test")
    )
    print(f"dataset: {n_images} images, manifest sha256 {manifest.sha256()}")
    return 0


def cmd_evaluate(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    out = _resolve_out(args, config)
    result = run_evaluation(config, out)
    print(f"estimation pipeline: {config.estimation_pipeline}")
    print("pipeline_test      size   n      median_pce")
    for entry in result.summary["per_pipeline"]:
        print(
            f"{entry['pipeline_test']:<18} {entry['patch_size']:<6} "
            f"{entry['n']:<6} {entry['median']:.2f}"
        )
    print("group  size   auc      tpr@{:.2%}".format(result.summary["target_fpr"]))
    for entry in result.summary["detection"]:
        print(
            f"{entry['group']:<6} {entry['patch_size']:<6} "
            f"{entry['auc']:.4f}   {entry['tpr_at_target']:.4f}"
        )
    print(f"report written to {Path(out) / 'report'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prnukit",
        description="Camera-fingerprint estimation, matching, localization and pipeline simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate a fingerprint from images")
    p.add_argument("--images", nargs="+", required=True, help="glob pattern(s)")
    p.add_argument("--out", required=True, help="output fingerprint file")
    p.add_argument("--denoiser", default="wavelet", help="wavelet[:VAR] or gaussian[:SIGMA]")
    p.add_argument("--camera", default="", help="camera id stored in the header")
    p.add_argument("--pipeline", default="", help="pipeline id stored in the header")
    p.add_argument("--whiten", action="store_true", help="spectrum-whiten after cleanup")
    p.add_argument(
        "--saturation-threshold",
        type=_parse_saturation,
        default=SATURATION_THRESHOLD,
        metavar="X",
        help="exclude samples >= X from the sums ('none' disables)",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("match", help="PCE of an image (or its patches) against a fingerprint")
    p.add_argument("--image", required=True)
    p.add_argument("--fingerprint", required=True)
    p.add_argument("--patch", type=int, default=0, help="patch size (0 = whole image)")
    p.add_argument("--json", action="store_true", help="emit JSON records")
    p.add_argument("--denoiser", default="wavelet")
    p.add_argument("--exclusion-radius", type=int, default=5)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("align", help="recover the relative shift of two fingerprints")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--max-shift", type=int, default=16)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("localize", help="sliding-window tampering probability map")
    p.add_argument("--image", required=True)
    p.add_argument("--fingerprint", required=True)
    p.add_argument("--window", type=int, default=128)
    p.add_argument("--stride", type=int, default=64)
    p.add_argument("--out-map", required=True)
    p.add_argument("--json-map", default="", help="also write the raw map as JSON")
    p.add_argument("--postprocess", choices=("none", "median3"), default="none")
    p.add_argument("--denoiser", default="wavelet")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("simulate", help="generate a dataset from an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="", help="output directory (default: config output_dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="run the full evaluation and write reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="", help="output directory (default: config output_dir)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
