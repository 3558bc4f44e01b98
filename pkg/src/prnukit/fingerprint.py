"""Noise-residual extraction and maximum-likelihood fingerprint estimation.

The residual of an image is R = I - D(I) for a denoising filter D. A camera
fingerprint is the per-pixel weighted aggregate

    k = sum_i(R_i * I_i) / sum_i(I_i^2)

over the input images, with pixels whose denominator is zero set to 0.
Cleanup subtracts row means then column means, removing linear gradients
the imaging pipeline tends to share across cameras.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .denoise import DenoiserSpec, apply_denoiser, local_signal_variance
from .errors import FormatError, ShapeError
from .imaging import as_plane

# Normalized-intensity level at and above which a sample is treated as
# saturated (254 on the 8-bit scale). Saturated pixels carry no usable
# multiplicative signal.
SATURATION_THRESHOLD = 254.0 / 255.0

_MAGIC = b"PRNU1\n"
_HEADER_KEYS = ("width", "height", "camera", "pipeline", "n")


@dataclass(eq=False)
class Fingerprint:
    """A fingerprint plane plus its provenance."""

    plane: np.ndarray
    camera_id: str = ""
    pipeline_id: str = ""
    n_sources: int = 1


def residual(image, denoiser: DenoiserSpec) -> np.ndarray:
    """Noise residual R = I - D(I). Pure; parallelizes across images."""
    p = as_plane(image)
    return p - apply_denoiser(p, denoiser)


def estimate_fingerprint(
    images,
    residuals,
    camera_id: str = "",
    pipeline_id: str = "",
    saturation_threshold: float | None = None,
) -> Fingerprint:
    """Aggregate residuals into a fingerprint estimate.

    ``images`` and ``residuals`` are equal-length lists of same-size planes.
    When ``saturation_threshold`` is given, samples at or above it are
    excluded from both sums on a per-image basis.
    """
    if len(images) == 0 or len(residuals) == 0:
        raise ValueError("need at least one image and one residual")
    if len(images) != len(residuals):
        raise ValueError(
            f"got {len(images)} images but {len(residuals)} residuals"
        )
    planes = [as_plane(im) for im in images]
    res = [as_plane(r) for r in residuals]
    shape = planes[0].shape
    for arr in planes + res:
        if arr.shape != shape:
            raise ShapeError(
                f"all planes must share dimensions; got {arr.shape} vs {shape}"
            )
    num = np.zeros(shape)
    den = np.zeros(shape)
    for im, r in zip(planes, res):
        if saturation_threshold is not None:
            keep = im < saturation_threshold
            num += np.where(keep, r * im, 0.0)
            den += np.where(keep, im * im, 0.0)
        else:
            num += r * im
            den += im * im
    k = np.divide(num, den, out=np.zeros(shape), where=den > 0)
    return Fingerprint(k, camera_id, pipeline_id, len(planes))


def zero_mean_rows_cols(plane: np.ndarray) -> np.ndarray:
    """Subtract each row's mean, then each column's mean."""
    p = as_plane(plane)
    p = p - p.mean(axis=1, keepdims=True)
    return p - p.mean(axis=0, keepdims=True)


def clean_fingerprint(fp: Fingerprint, whiten: bool = False) -> Fingerprint:
    """Zero out row and column means; optionally whiten the spectrum after."""
    plane = zero_mean_rows_cols(fp.plane)
    if whiten:
        plane = whiten_plane(plane)
    return replace(fp, plane=plane)


def whiten_plane(plane: np.ndarray, noise_std: float | None = None) -> np.ndarray:
    """Wiener filter on the Fourier magnitude, flattening the spectrum.

    Off the default estimation path; changes detection-statistic magnitudes.
    """
    p = as_plane(plane)
    h, w = p.shape
    std = p.std(ddof=1) if noise_std is None else float(noise_std)
    if std <= 0:
        return p.copy()
    spec = np.fft.fft2(p)
    mag = np.abs(spec) / np.sqrt(h * w)
    s2 = local_signal_variance(mag, std**2)
    gain = s2 / (s2 + std**2)
    out = np.fft.ifft2(spec * gain).real
    return out


def save_fingerprint(fp: Fingerprint, path) -> None:
    """Write the binary fingerprint file (magic, ASCII header, float64 LE payload)."""
    plane = as_plane(fp.plane)
    if fp.n_sources < 1:
        raise ValueError(f"n_sources must be >= 1, got {fp.n_sources}")
    for label, value in (("camera", fp.camera_id), ("pipeline", fp.pipeline_id)):
        if "\n" in value:
            raise ValueError(f"{label} id must not contain newlines")
    h, w = plane.shape
    header = (
        f"width={w}\nheight={h}\ncamera={fp.camera_id}\n"
        f"pipeline={fp.pipeline_id}\nn={fp.n_sources}\n--\n"
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(header.encode("ascii"))
        fh.write(plane.astype("<f8").tobytes())


def load_fingerprint(path) -> Fingerprint:
    """Read a fingerprint file written by :func:`save_fingerprint`."""
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise FormatError(f"{path}: bad magic bytes")
    sep = data.find(b"\n--\n", len(_MAGIC) - 1)
    if sep < 0:
        raise FormatError(f"{path}: missing header separator")
    try:
        header_text = data[len(_MAGIC) : sep].decode("ascii")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: non-ASCII header") from None
    fields = {}
    for line in header_text.split("\n"):
        key, eq, value = line.partition("=")
        if not eq:
            raise FormatError(f"{path}: malformed header line {line!r}")
        fields[key] = value
    if tuple(fields) != _HEADER_KEYS:
        raise FormatError(f"{path}: header keys {tuple(fields)} != {_HEADER_KEYS}")
    try:
        w = int(fields["width"])
        h = int(fields["height"])
        n = int(fields["n"])
    except ValueError:
        raise FormatError(f"{path}: non-integer header value") from None
    if w < 1 or h < 1 or n < 1:
        raise FormatError(f"{path}: invalid header values")
    payload = data[sep + 4 :]
    if len(payload) != w * h * 8:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {w * h * 8}"
        )
    plane = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(h, w)
    return Fingerprint(plane, fields["camera"], fields["pipeline"], n)
