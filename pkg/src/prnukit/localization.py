"""Sliding-window PCE maps and tampering-probability maps.

Localization assumes the image is geometrically aligned with the
fingerprint, so each window's PCE is evaluated at zero shift rather than
via a peak search; a peak search would reward spurious matches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import median_filter
from scipy.special import erfc

from .denoise import DenoiserSpec
from .errors import ShapeError
from .fingerprint import Fingerprint, residual
from .imaging import as_plane, save_gray_u8
from .matching import DEFAULT_EXCLUSION_RADIUS, pce

DEFAULT_WINDOW = 128
DEFAULT_STRIDE = 64


@dataclass(frozen=True)
class HeatMap:
    """Grid of per-window statistics over an image.

    Entry (i, j) describes the window whose top-left corner sits at image
    coordinates (j * stride, i * stride).
    """

    grid: np.ndarray
    window: int
    stride: int

    def origin(self, i: int, j: int):
        return (j * self.stride, i * self.stride)

    @property
    def shape(self):
        return self.grid.shape


def grid_shape(image_shape, window: int, stride: int):
    h, w = image_shape
    return ((h - window) // stride + 1, (w - window) // stride + 1)


def pce_map(
    image,
    fp: Fingerprint,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    denoiser: DenoiserSpec | None = None,
    exclusion_radius: int = DEFAULT_EXCLUSION_RADIUS,
) -> HeatMap:
    """Zero-shift PCE of every window against the co-located fingerprint region."""
    img = as_plane(image)
    kplane = fp.plane
    if img.shape != kplane.shape:
        raise ShapeError(
            f"image {img.shape} and fingerprint {kplane.shape} dimensions differ"
        )
    h, w = img.shape
    if window > min(h, w):
        raise ValueError(f"window {window} larger than image {w}x{h}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if denoiser is None:
        denoiser = DenoiserSpec()
    res = residual(img, denoiser)
    rows, cols = grid_shape(img.shape, window, stride)
    grid = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            y, x = i * stride, j * stride
            win_img = img[y : y + window, x : x + window]
            win_res = res[y : y + window, x : x + window]
            template = win_img * kplane[y : y + window, x : x + window]
            surface = _correlate(win_res, template)
            grid[i, j] = pce(surface, exclusion_radius, peak=(0, 0)).pce
    return HeatMap(grid, window, stride)


def _correlate(a, b):
    da = a - a.mean()
    db = b - b.mean()
    return np.fft.irfft2(np.conj(np.fft.rfft2(da)) * np.fft.rfft2(db), s=a.shape)


def probability_map(pmap: HeatMap) -> HeatMap:
    """Per-window tampering probability from the PCE tail model.

    A pointwise monotone non-increasing transform of the PCE: zero PCE maps
    to 0.5, large PCE to ~0, so authentic regions go dark and mismatched
    regions stay bright.
    """
    g = np.maximum(pmap.grid, 0.0)
    probs = 0.5 * erfc(np.sqrt(g) / np.sqrt(2.0))
    return HeatMap(probs, pmap.window, pmap.stride)


def render_map(hmap: HeatMap, path, postprocess: str = "none") -> None:
    """Write the map as an 8-bit grayscale image (PGM, or PNG by extension).

    Values are clipped to [0, 1] and scaled to [0, 255] with round-half-up;
    ``median3`` applies a 3x3 median filter first.
    """
    if postprocess not in ("none", "median3"):
        raise ValueError(f"unknown postprocess {postprocess!r}")
    g = hmap.grid
    if postprocess == "median3":
        g = median_filter(g, size=3, mode="nearest")
    q = np.floor(np.clip(g, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    save_gray_u8(q, path)


def map_to_json(hmap: HeatMap) -> dict:
    rows, cols = hmap.grid.shape
    return {
        "rows": rows,
        "cols": cols,
        "window": hmap.window,
        "stride": hmap.stride,
        "values": [float(v) for v in hmap.grid.ravel()],
    }


def map_from_json(obj: dict) -> HeatMap:
    grid = np.array(obj["values"], dtype=np.float64).reshape(
        obj["rows"], obj["cols"]
    )
    return HeatMap(grid, int(obj["window"]), int(obj["stride"]))


def save_map_json(hmap: HeatMap, path) -> None:
    Path(path).write_text(json.dumps(map_to_json(hmap)) + "\n")


def load_map_json(path) -> HeatMap:
    return map_from_json(json.loads(Path(path).read_text()))
