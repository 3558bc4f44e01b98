"""Synthetic sensor and configurable imaging pipelines.

A sensor carries a planted multiplicative per-pixel gain pattern (the
ground-truth fingerprint). Captures sample a scene through an RGGB Bayer
mosaic, apply the gain, add signal-proportional shot noise plus read noise,
and clip to [0, 1]. Development runs a declarative pipeline: demosaic,
white balance, tone curve, optional denoise, optional unsharp, and an
optional crop offset that de-synchronizes the output geometry.

Everything is deterministic given the seeds, so batch generation can be
parallelized with per-image seed streams without changing outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import convolve

from .denoise import DenoiserSpec, apply_denoiser, gaussian_denoise
from .errors import ShapeError
from .imaging import as_plane

DEMOSAIC_KINDS = ("bilinear", "edge_directed", "nearest")

_K_RB = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])
_K_G = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class ToneCurve:
    """Pointwise tone mapping: gamma(g) is v ** (1/g); scurve(s) blends v
    toward the smoothstep 3v^2 - 2v^3 with weight s."""

    kind: str = "gamma"
    gamma: float = 2.2
    strength: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gamma", "scurve"):
            raise ValueError(f"unknown tone curve {self.kind!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("scurve strength must be in [0, 1]")

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "gamma":
            return np.power(x, 1.0 / self.gamma)
        return x + self.strength * (x * x * (3.0 - 2.0 * x) - x)

    def to_json(self) -> dict:
        if self.kind == "gamma":
            return {"kind": "gamma", "gamma": self.gamma}
        return {"kind": "scurve", "strength": self.strength}

    @classmethod
    def from_json(cls, obj: dict) -> "ToneCurve":
        if obj.get("kind") == "scurve":
            return cls("scurve", strength=float(obj.get("strength", 1.0)))
        return cls("gamma", gamma=float(obj.get("gamma", 2.2)))


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative description of one simulated imaging pipeline."""

    id: str
    demosaic: str = "bilinear"
    white_balance: tuple = (1.0, 1.0)  # (r_gain, b_gain); green is unity
    tone: ToneCurve = field(default_factory=ToneCurve)
    denoise: Optional[DenoiserSpec] = None
    sharpen: Optional[float] = None  # unsharp amount, sigma fixed at 1.0
    crop_offset: tuple = (0, 0)

    def __post_init__(self):
        if self.demosaic not in DEMOSAIC_KINDS:
            raise ValueError(f"unknown demosaic {self.demosaic!r}")
        if min(self.white_balance) <= 0:
            raise ValueError("white balance gains must be > 0")
        if min(self.crop_offset) < 0:
            raise ValueError("crop_offset must be >= (0, 0)")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "demosaic": self.demosaic,
            "white_balance": list(self.white_balance),
            "tone": self.tone.to_json(),
            "denoise": self.denoise.to_json() if self.denoise else None,
            "sharpen": self.sharpen,
            "crop_offset": list(self.crop_offset),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        denoise = obj.get("denoise")
        return cls(
            id=obj["id"],
            demosaic=obj.get("demosaic", "bilinear"),
            white_balance=tuple(obj.get("white_balance", (1.0, 1.0))),
            tone=ToneCurve.from_json(obj.get("tone", {"kind": "gamma"})),
            denoise=DenoiserSpec.from_json(denoise) if denoise else None,
            sharpen=obj.get("sharpen"),
            crop_offset=tuple(obj.get("crop_offset", (0, 0))),
        )


@dataclass(eq=False)
class SensorProfile:
    """Sensor geometry, planted gain pattern and noise parameters."""

    width: int
    height: int
    prnu: np.ndarray
    strength: float
    read_noise_std: float = 0.002
    shot_noise_scale: float = 1.0e-4
    seed: int = 0

    def to_json(self) -> dict:
        """Serializable parameters; the gain plane itself is stored in the
        fingerprint binary format."""
        return {
            "width": self.width,
            "height": self.height,
            "strength": self.strength,
            "read_noise_std": self.read_noise_std,
            "shot_noise_scale": self.shot_noise_scale,
            "seed": self.seed,
        }


def synth_sensor(
    width: int,
    height: int,
    strength: float = 0.02,
    read_noise_std: float = 0.002,
    shot_noise_scale: float = 1.0e-4,
    seed: int = 0,
) -> SensorProfile:
    """Draw a zero-mean Gaussian gain pattern with std = strength."""
    if width < 64 or height < 64:
        raise ValueError(f"sensor dimensions must be >= 64, got {width}x{height}")
    if width % 2 or height % 2:
        raise ValueError("sensor dimensions must be even (full Bayer quads)")
    if not 0.0 < strength <= 0.1:
        raise ValueError(f"strength must be in (0, 0.1], got {strength}")
    rng = np.random.default_rng(seed)
    prnu = rng.normal(0.0, strength, size=(height, width))
    prnu -= prnu.mean()
    return SensorProfile(
        width, height, prnu, strength, read_noise_std, shot_noise_scale, seed
    )


def _smooth(plane: np.ndarray, sigma: float) -> np.ndarray:
    return gaussian_denoise(plane, sigma)


def synth_scene(
    width: int, height: int, kind: str = "flat", seed: int = 0, level: float = 0.5
) -> np.ndarray:
    """Generate an (H, W, 3) test scene: flat(level), gradient, or texture(seed)."""
    if width < 64 or height < 64:
        raise ValueError(f"scene dimensions must be >= 64, got {width}x{height}")
    if kind == "flat":
        return np.full((height, width, 3), float(level))
    if kind == "gradient":
        xx = np.arange(width)[None, :]
        yy = np.arange(height)[:, None]
        ramp = (xx + yy) / float((width - 1) + (height - 1))
        plane = 0.1 + 0.8 * ramp
        return np.repeat(plane[:, :, None], 3, axis=2)
    if kind == "texture":
        rng = np.random.default_rng(seed)
        base = _smooth(rng.standard_normal((height, width)), 4.0)
        out = np.empty((height, width, 3))
        for c in range(3):
            detail = _smooth(rng.standard_normal((height, width)), 4.0)
            ch = 0.75 * base + 0.35 * detail
            lo, hi = ch.min(), ch.max()
            out[:, :, c] = 0.1 + 0.8 * (ch - lo) / (hi - lo)
        return out
    raise ValueError(f"unknown scene kind {kind!r}")


def _bayer_masks(shape):
    h, w = shape
    odd_row = (np.arange(h) % 2)[:, None].astype(bool)
    odd_col = (np.arange(w) % 2)[None, :].astype(bool)
    r = ~odd_row & ~odd_col
    b = odd_row & odd_col
    g = ~(r | b)
    return r, g, b


def capture(scene, sensor: SensorProfile, seed: int = 0) -> np.ndarray:
    """Expose a scene through the RGGB mosaic of ``sensor``.

    raw = bayer * (1 + k) + shot + read, clipped to [0, 1]; shot noise
    variance is bayer * shot_noise_scale.
    """
    sc = np.asarray(scene, dtype=np.float64)
    if sc.ndim != 3 or sc.shape[2] != 3:
        raise ShapeError(f"scene must be (H, W, 3), got {sc.shape}")
    h, w = sc.shape[:2]
    if (w, h) != (sensor.width, sensor.height):
        raise ShapeError(
            f"scene {w}x{h} does not match sensor {sensor.width}x{sensor.height}"
        )
    if h % 2 or w % 2:
        raise ShapeError("mosaic requires even dimensions")
    rmask, _, bmask = _bayer_masks((h, w))
    bayer = np.where(rmask, sc[:, :, 0], np.where(bmask, sc[:, :, 2], sc[:, :, 1]))
    signal = bayer * (1.0 + sensor.prnu)
    rng = np.random.default_rng(seed)
    shot_sd = np.sqrt(np.clip(bayer, 0.0, None) * sensor.shot_noise_scale)
    noise = rng.standard_normal((h, w)) * shot_sd
    noise += rng.standard_normal((h, w)) * sensor.read_noise_std
    return np.clip(signal + noise, 0.0, 1.0)


def _demosaic_bilinear(raw: np.ndarray) -> np.ndarray:
    # Reflect padding mirrors about the edge sample, preserving CFA parity.
    pad = np.pad(raw, 2, mode="reflect")
    rmask, gmask, bmask = _bayer_masks(pad.shape)
    # With these kernels the mask-weighted normalizer is 4 at every site.
    r = convolve(pad * rmask, _K_RB, mode="same", method="direct") / 4.0
    g = convolve(pad * gmask, _K_G, mode="same", method="direct") / 4.0
    b = convolve(pad * bmask, _K_RB, mode="same", method="direct") / 4.0
    out = np.stack([r, g, b], axis=2)
    return out[2:-2, 2:-2]


def _demosaic_nearest(raw: np.ndarray) -> np.ndarray:
    r = np.repeat(np.repeat(raw[0::2, 0::2], 2, axis=0), 2, axis=1)
    b = np.repeat(np.repeat(raw[1::2, 1::2], 2, axis=0), 2, axis=1)
    g = raw.copy()
    g[0::2, 0::2] = raw[0::2, 1::2]  # R sites take the G to their right
    g[1::2, 1::2] = raw[1::2, 0::2]  # B sites take the G to their left
    return np.stack([r, g, b], axis=2)


def _demosaic_edge(raw: np.ndarray) -> np.ndarray:
    """Gradient-corrected edge-directed interpolation.

    Green at R/B sites picks the horizontal or vertical neighbor average by
    the smaller gradient and adds a same-color second-difference correction,
    so the green plane carries genuine cross-channel terms. Chroma is
    reconstructed by difference interpolation.
    """
    pad = np.pad(raw, 2, mode="reflect")
    rmask, gmask, bmask = _bayer_masks(pad.shape)
    left = np.roll(pad, 1, axis=1)
    right = np.roll(pad, -1, axis=1)
    up = np.roll(pad, 1, axis=0)
    down = np.roll(pad, -1, axis=0)
    left2 = np.roll(pad, 2, axis=1)
    right2 = np.roll(pad, -2, axis=1)
    up2 = np.roll(pad, 2, axis=0)
    down2 = np.roll(pad, -2, axis=0)
    dh = np.abs(left - right)
    dv = np.abs(up - down)
    est_h = 0.5 * (left + right) + 0.25 * (2.0 * pad - left2 - right2)
    est_v = 0.5 * (up + down) + 0.25 * (2.0 * pad - up2 - down2)
    est = np.where(dh < dv, est_h, np.where(dv < dh, est_v, 0.5 * (est_h + est_v)))
    green = np.where(gmask, pad, est)
    # Chroma by difference interpolation: own-color sites pass through.
    r = green + convolve((pad - green) * rmask, _K_RB, "same", "direct") / 4.0
    b = green + convolve((pad - green) * bmask, _K_RB, "same", "direct") / 4.0
    out = np.stack([r, green, b], axis=2)
    return out[2:-2, 2:-2]


_DEMOSAICERS = {
    "bilinear": _demosaic_bilinear,
    "edge_directed": _demosaic_edge,
    "nearest": _demosaic_nearest,
}


def develop(raw, config: PipelineConfig) -> np.ndarray:
    """Run one pipeline over a mosaiced plane; returns an (H', W', 3) image.

    A nonzero crop offset shrinks the output (even dimensions maintained).
    """
    p = as_plane(raw)
    h, w = p.shape
    if h % 2 or w % 2:
        raise ShapeError("mosaiced plane must have even dimensions")
    try:
        demosaic = _DEMOSAICERS[config.demosaic]
    except KeyError:
        raise ValueError(f"unknown demosaic {config.demosaic!r}") from None
    rgb = demosaic(p)
    r_gain, b_gain = config.white_balance
    rgb[:, :, 0] *= r_gain
    rgb[:, :, 2] *= b_gain
    rgb = np.clip(rgb, 0.0, 1.0)
    rgb = config.tone.apply(rgb)
    if config.denoise is not None:
        for c in range(3):
            rgb[:, :, c] = apply_denoiser(rgb[:, :, c], config.denoise)
    if config.sharpen is not None:
        for c in range(3):
            blurred = gaussian_denoise(rgb[:, :, c], 1.0)
            rgb[:, :, c] += config.sharpen * (rgb[:, :, c] - blurred)
    rgb = np.clip(rgb, 0.0, 1.0)
    dx, dy = config.crop_offset
    if dx >= w or dy >= h:
        raise ValueError(f"crop_offset {config.crop_offset} exceeds {w}x{h} plane")
    out_h = (h - dy) - (h - dy) % 2
    out_w = (w - dx) - (w - dx) % 2
    return rgb[dy : dy + out_h, dx : dx + out_w]


DEFAULT_PIPELINES = (
    PipelineConfig("bl_gamma", demosaic="bilinear"),
    PipelineConfig(
        "bl_scurve_dn",
        demosaic="bilinear",
        white_balance=(1.25, 0.8),
        tone=ToneCurve("scurve", strength=1.0),
        denoise=DenoiserSpec("gaussian", sigma=1.1),
    ),
    PipelineConfig("ed_gamma_sharp", demosaic="edge_directed", sharpen=1.2),
    PipelineConfig(
        "ed_scurve_dn",
        demosaic="edge_directed",
        white_balance=(1.25, 0.8),
        tone=ToneCurve("scurve", strength=1.0),
        denoise=DenoiserSpec("wavelet", noise_variance=(5.0 / 255.0) ** 2),
    ),
    PipelineConfig("nn_gamma", demosaic="nearest"),
    PipelineConfig(
        "nn_scurve_crop",
        demosaic="nearest",
        white_balance=(1.25, 0.8),
        tone=ToneCurve("scurve", strength=1.0),
        denoise=DenoiserSpec("gaussian", sigma=1.1),
        crop_offset=(4, 4),
    ),
)
