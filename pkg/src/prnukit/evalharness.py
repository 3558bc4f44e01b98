"""Experiment orchestration: dataset generation, per-pipeline fingerprint
estimation, cross-pipeline correlation matrices, PCE sweeps by patch size,
ROC metrics, and report emission.

All randomness flows from one master seed; per-image RNG streams are derived
from (seed, camera index, image index) so generation order or parallelism
cannot change outputs. Estimation captures are shared across pipelines: each
raw is exposed once and developed through every pipeline.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__ as _package_version
from .denoise import DenoiserSpec
from .errors import ShapeError
from .fingerprint import (
    SATURATION_THRESHOLD,
    Fingerprint,
    clean_fingerprint,
    estimate_fingerprint,
    residual,
    save_fingerprint,
)
from .imaging import load_image, save_image, to_luminance
from .ispsim import DEFAULT_PIPELINES, PipelineConfig, capture, develop, synth_scene, synth_sensor
from .matching import align, match_patch, ncc

DEFAULT_TARGET_FPR = 0.005

# Scene kind cycles (odd length, so interleaved split halves see every kind).
_EST_MIX = (("flat", 0.4), ("texture", 0.0), ("flat", 0.6), ("gradient", 0.0), ("flat", 0.75))
_TEST_MIX = (("texture", 0.0), ("gradient", 0.0), ("texture", 0.0), ("flat", 0.5), ("texture", 0.0))

_STREAM_SENSOR = 0
_STREAM_SCENE = 1
_STREAM_CAPTURE = 2


def derive_seed(*parts) -> int:
    """Deterministic child seed from integer parts."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    """One experiment: sensors, pipeline roster, dataset sizes, sweep knobs."""

    seed: int = 7
    width: int = 256
    height: int = 256
    strength: float = 0.02
    read_noise_std: float = 0.002
    shot_noise_scale: float = 1.0e-4
    cameras: tuple = ("cam0", "cam1")
    pipelines: tuple = DEFAULT_PIPELINES
    n_estimation: int = 20
    n_test: int = 20
    patch_sizes: tuple = (128,)
    estimation_pipeline: str = ""
    denoiser: DenoiserSpec = field(default_factory=DenoiserSpec)
    max_shift: int = 16
    saturation_threshold: Optional[float] = SATURATION_THRESHOLD
    output_dir: str = ""

    def __post_init__(self):
        if len(self.cameras) < 1:
            raise ValueError("need at least one camera")
        if len(self.pipelines) < 2:
            raise ValueError("need at least two pipelines")
        if self.n_estimation < 1 or self.n_test < 1:
            raise ValueError("n_estimation and n_test must be >= 1")
        ids = [p.id for p in self.pipelines]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate pipeline ids in {ids}")
        if not self.estimation_pipeline:
            self.estimation_pipeline = ids[0]
        elif self.estimation_pipeline not in ids:
            raise ValueError(f"estimation pipeline {self.estimation_pipeline!r} not in roster")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "sensor": {
                "width": self.width,
                "height": self.height,
                "strength": self.strength,
                "read_noise_std": self.read_noise_std,
                "shot_noise_scale": self.shot_noise_scale,
            },
            "cameras": list(self.cameras),
            "pipelines": [p.to_json() for p in self.pipelines],
            "n_estimation": self.n_estimation,
            "n_test": self.n_test,
            "patch_sizes": list(self.patch_sizes),
            "estimation_pipeline": self.estimation_pipeline,
            "denoiser": self.denoiser.to_json(),
            "max_shift": self.max_shift,
            "saturation_threshold": self.saturation_threshold,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        sensor = obj.get("sensor", {})
        pipelines = obj.get("pipelines", "default")
        if pipelines == "default":
            pipelines = DEFAULT_PIPELINES
        else:
            pipelines = tuple(PipelineConfig.from_json(p) for p in pipelines)
        denoiser = obj.get("denoiser")
        kwargs = dict(
            seed=int(obj.get("seed", 7)),
            width=int(sensor.get("width", 256)),
            height=int(sensor.get("height", 256)),
            strength=float(sensor.get("strength", 0.02)),
            read_noise_std=float(sensor.get("read_noise_std", 0.002)),
            shot_noise_scale=float(sensor.get("shot_noise_scale", 1.0e-4)),
            cameras=tuple(obj.get("cameras", ("cam0", "cam1"))),
            pipelines=pipelines,
            n_estimation=int(obj.get("n_estimation", 20)),
            n_test=int(obj.get("n_test", 20)),
            patch_sizes=tuple(int(s) for s in obj.get("patch_sizes", (128,))),
            estimation_pipeline=obj.get("estimation_pipeline", ""),
            max_shift=int(obj.get("max_shift", 16)),
            output_dir=obj.get("output_dir", ""),
        )
        if denoiser is not None:
            kwargs["denoiser"] = DenoiserSpec.from_json(denoiser)
        if "saturation_threshold" in obj:
            thr = obj["saturation_threshold"]
            kwargs["saturation_threshold"] = None if thr is None else float(thr)
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class DatasetManifest:
    """Index of a generated dataset; all paths are relative to ``root``."""

    root: Path
    data: dict

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def cameras(self):
        return list(self.data["cameras"])

    @property
    def pipeline_ids(self):
        return [p["id"] for p in self.data["pipelines"]]

    def pipelines(self):
        return [PipelineConfig.from_json(p) for p in self.data["pipelines"]]

    def image_paths(self, camera: str, pipeline_id: str, split: str):
        rels = self.data["images"][camera][pipeline_id][split]
        return [self.root / r for r in rels]

    def capture_ids(self, camera: str, split: str):
        return list(self.data["capture_ids"][camera][split])

    def groundtruth_path(self, camera: str) -> Path:
        return self.root / self.data["groundtruth"][camera]

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("ascii")).hexdigest()

    def save(self) -> None:
        (self.root / "manifest.json").write_text(
            json.dumps(self.data, sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def load(cls, root) -> "DatasetManifest":
        root = Path(root)
        return cls(root, json.loads((root / "manifest.json").read_text()))


def _scene_for(mix, idx: int):
    kind, level = mix[idx % len(mix)]
    return kind, level


def build_dataset(config: ExperimentConfig, out_dir) -> DatasetManifest:
    """Capture every raw once per camera and develop it through every pipeline.

    Re-running with the same config and seed produces a byte-identical tree.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    images = {}
    capture_ids = {}
    groundtruth = {}
    splits = (("estimation", config.n_estimation, _EST_MIX, 0),
              ("test", config.n_test, _TEST_MIX, config.n_estimation))
    for cam_idx, cam in enumerate(config.cameras):
        sensor = synth_sensor(
            config.width,
            config.height,
            strength=config.strength,
            read_noise_std=config.read_noise_std,
            shot_noise_scale=config.shot_noise_scale,
            seed=derive_seed(config.seed, _STREAM_SENSOR, cam_idx),
        )
        gt_rel = f"groundtruth/{cam}.fp"
        save_fingerprint(
            Fingerprint(sensor.prnu, camera_id=cam, pipeline_id="groundtruth", n_sources=1),
            root / gt_rel,
        )
        groundtruth[cam] = gt_rel
        images[cam] = {p.id: {"estimation": [], "test": []} for p in config.pipelines}
        capture_ids[cam] = {"estimation": [], "test": []}
        for split, count, mix, base in splits:
            for i in range(count):
                img_idx = base + i
                kind, level = _scene_for(mix, i)
                scene = synth_scene(
                    config.width,
                    config.height,
                    kind=kind,
                    seed=derive_seed(config.seed, _STREAM_SCENE, cam_idx, img_idx),
                    level=level,
                )
                raw = capture(
                    scene,
                    sensor,
                    seed=derive_seed(config.seed, _STREAM_CAPTURE, cam_idx, img_idx),
                )
                capture_ids[cam][split].append(f"{cam}/{img_idx:03d}")
                for pipe in config.pipelines:
                    developed = develop(raw, pipe)
                    rel = f"images/{cam}/{pipe.id}/{split}_{i:03d}.ppm"
                    save_image(developed, root / rel, bit_depth=16)
                    images[cam][pipe.id][split].append(rel)
    data = {
        "seed": config.seed,
        "sensor": {
            "width": config.width,
            "height": config.height,
            "strength": config.strength,
            "read_noise_std": config.read_noise_std,
            "shot_noise_scale": config.shot_noise_scale,
        },
        "cameras": list(config.cameras),
        "pipelines": [p.to_json() for p in config.pipelines],
        "n_estimation": config.n_estimation,
        "n_test": config.n_test,
        "images": images,
        "capture_ids": capture_ids,
        "groundtruth": groundtruth,
    }
    manifest = DatasetManifest(root, data)
    manifest.save()
    return manifest


@dataclass
class FingerprintSet:
    """Full-split fingerprint plus interleaved half-split estimates."""

    full: Fingerprint
    half_a: Fingerprint
    half_b: Fingerprint


def fingerprint_from_paths(
    paths,
    denoiser: DenoiserSpec,
    camera_id: str = "",
    pipeline_id: str = "",
    saturation_threshold: Optional[float] = SATURATION_THRESHOLD,
) -> Fingerprint:
    imgs = [to_luminance(load_image(p)) for p in paths]
    res = [residual(im, denoiser) for im in imgs]
    fp = estimate_fingerprint(
        imgs, res, camera_id, pipeline_id, saturation_threshold=saturation_threshold
    )
    return clean_fingerprint(fp)


def estimate_fingerprint_sets(
    manifest: DatasetManifest,
    denoiser: Optional[DenoiserSpec] = None,
    saturation_threshold: Optional[float] = SATURATION_THRESHOLD,
) -> dict:
    """Per (camera, pipeline id): full and half-split fingerprints.

    Residuals are computed once per image and reused for all three
    estimates; halves interleave even/odd estimation indices so both see
    the same scene mix.
    """
    if denoiser is None:
        denoiser = DenoiserSpec()
    sets = {}
    for cam in manifest.cameras:
        for pid in manifest.pipeline_ids:
            paths = manifest.image_paths(cam, pid, "estimation")
            imgs = [to_luminance(load_image(p)) for p in paths]
            res = [residual(im, denoiser) for im in imgs]

            def _clean_est(idx):
                fp = estimate_fingerprint(
                    [imgs[i] for i in idx],
                    [res[i] for i in idx],
                    cam,
                    pid,
                    saturation_threshold=saturation_threshold,
                )
                return clean_fingerprint(fp)

            n = len(imgs)
            sets[(cam, pid)] = FingerprintSet(
                full=_clean_est(range(n)),
                half_a=_clean_est(range(0, n, 2)),
                half_b=_clean_est(range(1, n, 2)),
            )
    return sets


def common_crop_planes(planes):
    """Crop every plane to the shared top-left rectangle."""
    h = min(p.shape[0] for p in planes)
    w = min(p.shape[1] for p in planes)
    return [p[:h, :w] for p in planes]


@dataclass
class CorrelationMatrix:
    ids: list
    ncc: np.ndarray  # (n, n)
    shifts: np.ndarray  # (n, n, 2) as (dx, dy)


def correlation_matrix(fingerprints, max_shift: int = 16) -> CorrelationMatrix:
    """Post-alignment NCC between all fingerprint pairs.

    The matrix is symmetric by construction: entry (j, i) mirrors (i, j)
    with the opposite shift. Diagonal entries are 1 at shift (0, 0).
    """
    if len(fingerprints) < 2:
        raise ValueError("need at least two fingerprints")
    shapes = {fp.plane.shape for fp in fingerprints}
    if len(shapes) != 1:
        raise ShapeError(f"fingerprints differ in shape: {sorted(shapes)}")
    n = len(fingerprints)
    ids = [fp.pipeline_id or f"fp{i}" for i, fp in enumerate(fingerprints)]
    mat = np.eye(n)
    shifts = np.zeros((n, n, 2), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            (dx, dy), corr = align(fingerprints[i], fingerprints[j], max_shift)
            mat[i, j] = mat[j, i] = corr
            shifts[i, j] = (dx, dy)
            shifts[j, i] = (-dx, -dy)
    return CorrelationMatrix(ids, mat, shifts)


@dataclass
class SplitHalfReport:
    """Half-vs-half fingerprint correlations, per camera.

    ``same``: (camera, pipeline) -> NCC between the two halves.
    ``cross_raw``: (camera, pipe_a, pipe_b) -> un-aligned NCC (half A of a
    vs half B of b), after common-cropping.
    ``cross_aligned``: same keys -> (NCC after alignment, (dx, dy)).
    """

    same: dict
    cross_raw: dict
    cross_aligned: dict


def split_half_correlations(
    manifest: DatasetManifest, sets: dict, max_shift: int = 16
) -> SplitHalfReport:
    same = {}
    cross_raw = {}
    cross_aligned = {}
    pids = manifest.pipeline_ids
    for cam in manifest.cameras:
        planes_a = common_crop_planes([sets[(cam, pid)].half_a.plane for pid in pids])
        planes_b = common_crop_planes([sets[(cam, pid)].half_b.plane for pid in pids])
        for i, pid in enumerate(pids):
            same[(cam, pid)] = ncc(planes_a[i], planes_b[i])
        for i in range(len(pids)):
            for j in range(len(pids)):
                if i == j:
                    continue
                key = (cam, pids[i], pids[j])
                cross_raw[key] = ncc(planes_a[i], planes_b[j])
                shift, corr = align(planes_a[i], planes_b[j], max_shift)
                cross_aligned[key] = (corr, shift)
    return SplitHalfReport(same, cross_raw, cross_aligned)


@dataclass(frozen=True)
class ScoreRecord:
    """One PCE measurement from the sweep."""

    camera_fp: str
    camera_test: str
    pipeline_est: str
    pipeline_test: str
    patch_size: int
    origin: tuple
    image: str
    pce: float
    peak_value: float
    peak: tuple
    p_value: float
    label: str  # "positive" (same camera) or "negative"

    def to_json(self) -> dict:
        return {
            "camera_fp": self.camera_fp,
            "camera_test": self.camera_test,
            "pipeline_est": self.pipeline_est,
            "pipeline_test": self.pipeline_test,
            "patch_size": self.patch_size,
            "origin": list(self.origin),
            "image": self.image,
            "pce": self.pce,
            "peak_value": self.peak_value,
            "peak": list(self.peak),
            "p_value": self.p_value,
            "label": self.label,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScoreRecord":
        return cls(
            camera_fp=obj["camera_fp"],
            camera_test=obj["camera_test"],
            pipeline_est=obj["pipeline_est"],
            pipeline_test=obj["pipeline_test"],
            patch_size=int(obj["patch_size"]),
            origin=tuple(obj["origin"]),
            image=obj["image"],
            pce=float(obj["pce"]),
            peak_value=float(obj["peak_value"]),
            peak=tuple(obj["peak"]),
            p_value=float(obj["p_value"]),
            label=obj["label"],
        )


def write_score_records(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")


def read_score_records(path):
    with open(path) as fh:
        return [ScoreRecord.from_json(json.loads(line)) for line in fh if line.strip()]


DEFAULT_PATCH_SIZES = (128, 256, 512, 1024)


def pce_sweep(
    manifest: DatasetManifest,
    fingerprints: dict,
    estimation_pipeline: str,
    patch_sizes=DEFAULT_PATCH_SIZES,
    denoiser: Optional[DenoiserSpec] = None,
    exclusion_radius: int = 5,
):
    """PCE of every non-overlapping patch of every test image against the
    estimation-pipeline fingerprint of every camera.

    ``fingerprints`` maps (camera, pipeline id) -> Fingerprint; only the
    estimation pipeline's entries are used. Patch sizes that do not fit the
    common image/fingerprint area are skipped.
    """
    if denoiser is None:
        denoiser = DenoiserSpec()
    for cam in manifest.cameras:
        if (cam, estimation_pipeline) not in fingerprints:
            raise KeyError(
                f"no fingerprint for camera {cam!r}, pipeline {estimation_pipeline!r}"
            )
    records = []
    for cam_test in manifest.cameras:
        for pid in manifest.pipeline_ids:
            for path in manifest.image_paths(cam_test, pid, "test"):
                img = to_luminance(load_image(path))
                res = residual(img, denoiser)
                rel = str(path.relative_to(manifest.root))
                for cam_fp in manifest.cameras:
                    fp = fingerprints[(cam_fp, estimation_pipeline)]
                    h = min(fp.plane.shape[0], img.shape[0])
                    w = min(fp.plane.shape[1], img.shape[1])
                    label = "positive" if cam_fp == cam_test else "negative"
                    for size in patch_sizes:
                        for iy in range(h // size):
                            for ix in range(w // size):
                                x, y = ix * size, iy * size
                                score = match_patch(
                                    img[y : y + size, x : x + size],
                                    res[y : y + size, x : x + size],
                                    fp,
                                    (x, y),
                                    exclusion_radius,
                                )
                                records.append(
                                    ScoreRecord(
                                        camera_fp=cam_fp,
                                        camera_test=cam_test,
                                        pipeline_est=estimation_pipeline,
                                        pipeline_test=pid,
                                        patch_size=size,
                                        origin=(x, y),
                                        image=rel,
                                        pce=score.pce,
                                        peak_value=score.peak_value,
                                        peak=score.peak_location,
                                        p_value=score.p_value,
                                        label=label,
                                    )
                                )
    return records


@dataclass(frozen=True)
class RocCurve:
    """Threshold sweep over the union of scores (ties grouped).

    ``thresholds`` is descending with a leading +inf, so fpr/tpr start at
    (0, 0) and end at (1, 1); ``auc`` is the trapezoidal integral.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def roc(pos_scores, neg_scores) -> RocCurve:
    pos = np.asarray(list(pos_scores), dtype=np.float64)
    neg = np.asarray(list(neg_scores), dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score lists must be non-empty")
    thr = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    tpr = (pos.size - np.searchsorted(pos_sorted, thr, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg_sorted, thr, side="left")) / neg.size
    tpr = np.concatenate([[0.0], tpr])
    fpr = np.concatenate([[0.0], fpr])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(np.concatenate([[np.inf], thr]), fpr, tpr, auc)


def tpr_at_fpr(curve: RocCurve, target_fpr: float) -> float:
    """TPR at the largest achieved FPR <= target (conservative step reading)."""
    if not 0.0 < target_fpr < 1.0:
        raise ValueError(f"target_fpr must be in (0, 1), got {target_fpr}")
    eligible = curve.fpr <= target_fpr
    best = curve.fpr[eligible].max()
    return float(curve.tpr[eligible & (curve.fpr == best)].max())


def summarize(
    records,
    estimation_pipeline: str,
    target_fpr: float = DEFAULT_TARGET_FPR,
) -> dict:
    """Aggregate sweep records into per-pipeline medians and detection metrics.

    Negatives are pooled across test pipelines: the null is "different
    sensor", whatever pipeline developed the test image.
    """
    records = list(records)
    sizes = sorted({r.patch_size for r in records})
    pipeline_ids = sorted({r.pipeline_test for r in records})
    per_pipeline = []
    for pid in pipeline_ids:
        for size in sizes:
            scores = [
                r.pce
                for r in records
                if r.label == "positive" and r.pipeline_test == pid and r.patch_size == size
            ]
            if not scores:
                continue
            arr = np.asarray(scores)
            per_pipeline.append(
                {
                    "pipeline_est": estimation_pipeline,
                    "pipeline_test": pid,
                    "patch_size": size,
                    "n": int(arr.size),
                    "median": float(np.median(arr)),
                    "q25": float(np.percentile(arr, 25)),
                    "q75": float(np.percentile(arr, 75)),
                }
            )
    detection = []
    for size in sizes:
        neg = [r.pce for r in records if r.label == "negative" and r.patch_size == size]
        for group in ("same", "cross"):
            pos = [
                r.pce
                for r in records
                if r.label == "positive"
                and r.patch_size == size
                and ((r.pipeline_test == estimation_pipeline) == (group == "same"))
            ]
            if not pos or not neg:
                continue
            curve = roc(pos, neg)
            detection.append(
                {
                    "patch_size": size,
                    "group": group,
                    "n_pos": len(pos),
                    "n_neg": len(neg),
                    "auc": curve.auc,
                    "tpr_at_target": tpr_at_fpr(curve, target_fpr),
                }
            )
    return {
        "estimation_pipeline": estimation_pipeline,
        "target_fpr": target_fpr,
        "per_pipeline": per_pipeline,
        "detection": detection,
    }


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def report(
    out_dir,
    manifest: DatasetManifest,
    matrix: Optional[CorrelationMatrix],
    records,
    summary: dict,
    config: Optional[ExperimentConfig] = None,
) -> None:
    """Emit the CSV/JSON report tree (deterministic bytes for a fixed seed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if matrix is not None:
        _write_csv(
            out / "correlation.csv",
            [""] + matrix.ids,
            [[matrix.ids[i]] + list(matrix.ncc[i]) for i in range(len(matrix.ids))],
        )
        shift_rows = []
        for i in range(len(matrix.ids)):
            for j in range(len(matrix.ids)):
                if i == j:
                    continue
                dx, dy = matrix.shifts[i, j]
                shift_rows.append([matrix.ids[i], matrix.ids[j], int(dx), int(dy)])
        _write_csv(
            out / "alignment_shifts.csv",
            ["pipeline_a", "pipeline_b", "dx", "dy"],
            shift_rows,
        )
    _write_csv(
        out / "pce_summary.csv",
        ["pipeline_est", "pipeline_test", "patch_size", "n", "median", "q25", "q75"],
        [
            [e["pipeline_est"], e["pipeline_test"], e["patch_size"], e["n"], e["median"], e["q25"], e["q75"]]
            for e in summary["per_pipeline"]
        ],
    )
    roc_rows = []
    records = list(records)
    for entry in summary["detection"]:
        size, group = entry["patch_size"], entry["group"]
        neg = [r.pce for r in records if r.label == "negative" and r.patch_size == size]
        pos = [
            r.pce
            for r in records
            if r.label == "positive"
            and r.patch_size == size
            and ((r.pipeline_test == summary["estimation_pipeline"]) == (group == "same"))
        ]
        curve = roc(pos, neg)
        for t, f, tp in zip(curve.thresholds, curve.fpr, curve.tpr):
            roc_rows.append([group, size, t, f, tp])
    _write_csv(out / "roc_points.csv", ["group", "patch_size", "threshold", "fpr", "tpr"], roc_rows)
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    write_score_records(records, out / "score_records.jsonl")
    metadata = {
        "package_version": _package_version,
        "seed": manifest.seed,
        "manifest_sha256": manifest.sha256(),
        "config": config.to_json() if config is not None else None,
    }
    (out / "run_metadata.json").write_text(json.dumps(metadata, sort_keys=True, indent=2) + "\n")


@dataclass
class RunResult:
    manifest: DatasetManifest
    fingerprint_sets: dict
    matrix: CorrelationMatrix
    records: list
    summary: dict


def run_evaluation(config: ExperimentConfig, out_dir) -> RunResult:
    """End-to-end run: dataset, fingerprints, matrix, sweep, report."""
    out = Path(out_dir)
    manifest = build_dataset(config, out / "dataset")
    sets = estimate_fingerprint_sets(
        manifest, config.denoiser, saturation_threshold=config.saturation_threshold
    )
    cam0 = manifest.cameras[0]
    full_planes = common_crop_planes(
        [sets[(cam0, pid)].full.plane for pid in manifest.pipeline_ids]
    )
    full_fps = [
        Fingerprint(plane, cam0, pid, sets[(cam0, pid)].full.n_sources)
        for plane, pid in zip(full_planes, manifest.pipeline_ids)
    ]
    matrix = correlation_matrix(full_fps, config.max_shift)
    fingerprints = {key: s.full for key, s in sets.items()}
    records = pce_sweep(
        manifest,
        fingerprints,
        config.estimation_pipeline,
        config.patch_sizes,
        config.denoiser,
    )
    summary = summarize(records, config.estimation_pipeline)
    report(out / "report", manifest, matrix, records, summary, config)
    return RunResult(manifest, sets, matrix, records, summary)
