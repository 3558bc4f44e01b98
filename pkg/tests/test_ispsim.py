import numpy as np
import pytest

from prnukit.denoise import DenoiserSpec
from prnukit.errors import ShapeError
from prnukit.fingerprint import clean_fingerprint, estimate_fingerprint, residual
from prnukit.ispsim import (
    DEFAULT_PIPELINES,
    PipelineConfig,
    SensorProfile,
    ToneCurve,
    capture,
    develop,
    synth_scene,
    synth_sensor,
)
from prnukit.matching import align, ncc


def test_sensor_determinism_and_stats():
    a = synth_sensor(256, 256, strength=0.02, seed=9)
    b = synth_sensor(256, 256, strength=0.02, seed=9)
    assert np.array_equal(a.prnu, b.prnu)
    assert abs(a.prnu.mean()) < 1e-3
    assert 0.019 <= a.prnu.std() <= 0.021
    c = synth_sensor(256, 256, strength=0.02, seed=10)
    assert abs(ncc(a.prnu, c.prnu)) < 0.05


def test_sensor_validation():
    with pytest.raises(ValueError):
        synth_sensor(32, 256)
    with pytest.raises(ValueError):
        synth_sensor(256, 256, strength=0.0)
    with pytest.raises(ValueError):
        synth_sensor(256, 256, strength=0.2)
    with pytest.raises(ValueError):
        synth_sensor(65, 64)


def test_scene_kinds():
    flat = synth_scene(64, 64, "flat", level=0.5)
    assert np.all(flat == 0.5)
    grad = synth_scene(96, 64, "gradient")
    lum = grad[:, :, 0]
    assert lum[0, 0] == lum.min() and lum[-1, -1] == lum.max()
    tex = synth_scene(64, 64, "texture", seed=3)
    assert tex.min() >= 0.1 - 1e-12 and tex.max() <= 0.9 + 1e-12
    assert np.array_equal(tex, synth_scene(64, 64, "texture", seed=3))
    with pytest.raises(ValueError):
        synth_scene(64, 64, "checker")
    with pytest.raises(ValueError):
        synth_scene(32, 64, "flat")


def test_capture_zero_model_collapse():
    scene = synth_scene(64, 64, "flat", level=0.5)
    zero = SensorProfile(64, 64, np.zeros((64, 64)), 0.0, 0.0, 0.0, 0)
    raw = capture(scene, zero, seed=1)
    assert np.array_equal(raw, np.full((64, 64), 0.5))


def test_capture_algebraic_inversion():
    sensor = synth_sensor(96, 96, strength=0.02, read_noise_std=0.0, shot_noise_scale=0.0, seed=2)
    raw = capture(synth_scene(96, 96, "flat", level=0.5), sensor, seed=0)
    assert np.abs(raw / 0.5 - 1.0 - sensor.prnu).max() < 1e-12


def test_capture_shape_checks():
    sensor = synth_sensor(64, 64, seed=1)
    with pytest.raises(ShapeError):
        capture(synth_scene(64, 96, "flat"), sensor)
    with pytest.raises(ShapeError):
        capture(np.zeros((64, 64)), sensor)


def test_capture_averaging_recovers_pattern():
    sensor = synth_sensor(128, 128, strength=0.02, seed=3)
    acc = np.zeros((128, 128))
    scene = synth_scene(128, 128, "flat", level=0.5)
    n = 100
    for i in range(n):
        acc += capture(scene, sensor, seed=i) / 0.5 - 1.0
    assert ncc(acc / n, sensor.prnu) > 0.95


def test_develop_uniform_preserved():
    raw = np.full((64, 64), 0.37)
    for cfg in DEFAULT_PIPELINES:
        out = develop(raw, cfg)
        for c in range(3):
            assert np.ptp(out[:, :, c]) < 1e-12, cfg.id


def test_develop_nearest_keeps_green_sites():
    sensor = synth_sensor(64, 64, seed=4)
    raw = capture(synth_scene(64, 64, "texture", seed=5), sensor, seed=6)
    cfg = PipelineConfig("ident", demosaic="nearest", tone=ToneCurve("gamma", gamma=1.0))
    g = develop(raw, cfg)[:, :, 1]
    assert np.array_equal(g[0::2, 1::2], raw[0::2, 1::2])
    assert np.array_equal(g[1::2, 0::2], raw[1::2, 0::2])


def test_demosaicers_differ_on_texture():
    sensor = synth_sensor(64, 64, seed=7)
    raw = capture(synth_scene(64, 64, "texture", seed=8), sensor, seed=9)
    outs = [
        develop(raw, PipelineConfig(d, demosaic=d))
        for d in ("bilinear", "edge_directed", "nearest")
    ]
    for i in range(3):
        for j in range(i + 1, 3):
            assert np.abs(outs[i] - outs[j]).max() > 0


def test_develop_deterministic():
    sensor = synth_sensor(64, 64, seed=10)
    raw = capture(synth_scene(64, 64, "texture", seed=11), sensor, seed=12)
    cfg = DEFAULT_PIPELINES[1]
    assert np.array_equal(develop(raw, cfg), develop(raw, cfg))


def test_develop_crop_shrinks_to_even_dims():
    raw = np.full((64, 64), 0.5)
    cfg = PipelineConfig("crop", demosaic="bilinear", crop_offset=(4, 4))
    assert develop(raw, cfg).shape == (60, 60, 3)
    odd = PipelineConfig("crop3", demosaic="bilinear", crop_offset=(3, 5))
    assert develop(raw, odd).shape == (58, 60, 3)


def test_develop_validation():
    with pytest.raises(ShapeError):
        develop(np.zeros((63, 64)), DEFAULT_PIPELINES[0])
    with pytest.raises(ValueError):
        PipelineConfig("bad", demosaic="vng")
    with pytest.raises(ValueError):
        PipelineConfig("bad", white_balance=(0.0, 1.0))
    with pytest.raises(ValueError):
        PipelineConfig("bad", crop_offset=(-1, 0))
    with pytest.raises(ValueError):
        ToneCurve("gamma", gamma=0.0)
    with pytest.raises(ValueError):
        ToneCurve("log")


def test_pipeline_config_json_roundtrip():
    for cfg in DEFAULT_PIPELINES:
        assert PipelineConfig.from_json(cfg.to_json()) == cfg


def test_sensor_json_omits_pattern():
    sensor = synth_sensor(64, 64, seed=13)
    obj = sensor.to_json()
    assert "prnu" not in obj
    assert obj["width"] == 64 and obj["seed"] == 13


def _pipeline_fingerprint(raws, cfg, denoiser, indices):
    imgs = []
    res = []
    for i in indices:
        lum = develop(raws[i], cfg).mean(axis=2)  # equal-weight reduce is fine here
        imgs.append(lum)
        res.append(residual(lum, denoiser))
    return clean_fingerprint(estimate_fingerprint(imgs, res)).plane


def test_crop_offset_desync_restored_by_align():
    # A pipeline differing from its base only by a crop offset de-synchronizes
    # the fingerprint; alignment restores it to the same-config level.
    sensor = synth_sensor(192, 192, strength=0.02, seed=14)
    denoiser = DenoiserSpec()
    raws = [
        capture(synth_scene(192, 192, "flat", level=0.4 + 0.03 * (i % 5)), sensor, seed=100 + i)
        for i in range(16)
    ]
    base = PipelineConfig("base", demosaic="bilinear")
    cropped = PipelineConfig("cropped", demosaic="bilinear", crop_offset=(4, 4))
    fp_base_a = _pipeline_fingerprint(raws, base, denoiser, range(0, 16, 2))
    fp_base_b = _pipeline_fingerprint(raws, base, denoiser, range(1, 16, 2))
    fp_crop_b = _pipeline_fingerprint(raws, cropped, denoiser, range(1, 16, 2))

    h, w = fp_crop_b.shape
    baseline = ncc(fp_base_a, fp_base_b)
    unaligned = ncc(fp_base_a[:h, :w], fp_crop_b)
    shift, aligned = align(fp_base_a[:h, :w], fp_crop_b, max_shift=8)
    assert unaligned < 0.1
    assert (abs(shift[0]), abs(shift[1])) == (4, 4)
    assert aligned >= baseline - 0.05
