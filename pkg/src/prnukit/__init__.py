"""Camera-fingerprint forensics toolkit with a synthetic sensor/ISP testbed."""

__version__ = "0.1.0"

from .denoise import DenoiserSpec, apply_denoiser, gaussian_denoise, wavelet_denoise
from .errors import DegenerateInputError, FormatError, ShapeError
from .fingerprint import (
    SATURATION_THRESHOLD,
    Fingerprint,
    clean_fingerprint,
    estimate_fingerprint,
    load_fingerprint,
    residual,
    save_fingerprint,
    whiten_plane,
)
from .imaging import (
    PatchGrid,
    crop,
    load_image,
    save_image,
    tile_patches,
    to_luminance,
)
from .ispsim import (
    DEFAULT_PIPELINES,
    PipelineConfig,
    SensorProfile,
    ToneCurve,
    capture,
    develop,
    synth_scene,
    synth_sensor,
)
from .localization import HeatMap, pce_map, probability_map, render_map
from .matching import (
    PceScore,
    align,
    cross_correlate,
    cross_correlate_direct,
    match_patch,
    ncc,
    p_value,
    pce,
)

__all__ = [
    "DEFAULT_PIPELINES",
    "DegenerateInputError",
    "DenoiserSpec",
    "Fingerprint",
    "FormatError",
    "HeatMap",
    "PatchGrid",
    "PceScore",
    "PipelineConfig",
    "SATURATION_THRESHOLD",
    "SensorProfile",
    "ShapeError",
    "ToneCurve",
    "align",
    "apply_denoiser",
    "capture",
    "clean_fingerprint",
    "crop",
    "cross_correlate",
    "cross_correlate_direct",
    "develop",
    "estimate_fingerprint",
    "gaussian_denoise",
    "load_fingerprint",
    "load_image",
    "match_patch",
    "ncc",
    "p_value",
    "pce",
    "pce_map",
    "probability_map",
    "render_map",
    "residual",
    "save_fingerprint",
    "save_image",
    "synth_scene",
    "synth_sensor",
    "tile_patches",
    "to_luminance",
    "wavelet_denoise",
    "whiten_plane",
]
