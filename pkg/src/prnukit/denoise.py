"""Denoising filters used to form noise residuals.

The wavelet denoiser is the workhorse: a 4-level Daubechies-8 decomposition
with per-subband local Wiener shrinkage, where each detail coefficient is
scaled by s2 / (s2 + noise_variance) and s2 is the smallest windowed energy
estimate (window sizes 3, 5, 7, 9) minus the noise floor, clamped at zero.
The Gaussian blur is a simple baseline for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d, uniform_filter

from . import wavelets
from .errors import ShapeError
from .imaging import as_plane

# The "sigma = 3 on the 8-bit scale" convention, in normalized-intensity units.
DEFAULT_NOISE_VARIANCE = (3.0 / 255.0) ** 2

_WINDOW_SIZES = (3, 5, 7, 9)
_MIN_SIZE = 16


@dataclass(frozen=True)
class DenoiserSpec:
    """Declarative description of a denoising filter.

    kind: "wavelet" (uses noise_variance, intensity^2 units) or
    "gaussian" (uses sigma, pixels).
    """

    kind: str = "wavelet"
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("wavelet", "gaussian"):
            raise ValueError(f"unknown denoiser kind {self.kind!r}")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be > 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    def to_json(self) -> dict:
        if self.kind == "wavelet":
            return {"kind": "wavelet", "noise_variance": self.noise_variance}
        return {"kind": "gaussian", "sigma": self.sigma}

    @classmethod
    def from_json(cls, obj: dict) -> "DenoiserSpec":
        kind = obj.get("kind", "wavelet")
        kwargs = {}
        if "noise_variance" in obj:
            kwargs["noise_variance"] = float(obj["noise_variance"])
        if "sigma" in obj:
            kwargs["sigma"] = float(obj["sigma"])
        return cls(kind=kind, **kwargs)


def local_signal_variance(coeff: np.ndarray, noise_variance: float) -> np.ndarray:
    """Conservative local signal-energy estimate: the minimum over window sizes
    of the windowed mean energy, minus the noise floor, clamped at zero."""
    energy = coeff * coeff
    est = None
    for size in _WINDOW_SIZES:
        m = uniform_filter(energy, size=size, mode="constant")
        est = m if est is None else np.minimum(est, m)
    return np.maximum(est - noise_variance, 0.0)


def _shrink(coeff: np.ndarray, noise_variance: float) -> np.ndarray:
    s2 = local_signal_variance(coeff, noise_variance)
    return coeff * (s2 / (s2 + noise_variance))


def wavelet_denoise(
    plane, noise_variance: float = DEFAULT_NOISE_VARIANCE, levels: int = 4
) -> np.ndarray:
    """Wavelet-domain Wiener denoiser. Requires both dimensions >= 16."""
    p = as_plane(plane)
    if noise_variance <= 0:
        raise ValueError("noise_variance must be > 0")
    if min(p.shape) < _MIN_SIZE:
        raise ShapeError(
            f"plane {p.shape[1]}x{p.shape[0]} smaller than minimum "
            f"decomposition size {_MIN_SIZE}"
        )
    approx, details, shapes = wavelets.decompose(p, levels)
    shrunk = [
        tuple(_shrink(band, noise_variance) for band in level) for level in details
    ]
    return wavelets.reconstruct(approx, shrunk, shapes)


def gaussian_denoise(plane, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at +-3 sigma and normalized
    to sum 1, edges handled by reflection."""
    p = as_plane(plane)
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    radius = int(math.floor(3.0 * sigma))
    if radius == 0:
        return p.copy()
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (t / sigma) ** 2)
    kernel /= kernel.sum()
    out = convolve1d(p, kernel, axis=0, mode="reflect")
    return convolve1d(out, kernel, axis=1, mode="reflect")


def apply_denoiser(plane, spec: DenoiserSpec) -> np.ndarray:
    if spec.kind == "wavelet":
        return wavelet_denoise(plane, spec.noise_variance)
    return gaussian_denoise(plane, spec.sigma)
