import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prnukit.denoise import DenoiserSpec
from prnukit.errors import FormatError, ShapeError
from prnukit.fingerprint import (
    Fingerprint,
    clean_fingerprint,
    estimate_fingerprint,
    load_fingerprint,
    residual,
    save_fingerprint,
    whiten_plane,
    zero_mean_rows_cols,
)
from prnukit.ispsim import capture, synth_scene, synth_sensor
from prnukit.matching import ncc


def test_single_image_ratio():
    img = np.full((4, 4), 2.0)
    res = np.full((4, 4), 0.5)
    fp = estimate_fingerprint([img], [res])
    assert np.allclose(fp.plane, 0.25)
    assert fp.n_sources == 1


def test_two_image_weighted_ratio():
    imgs = [np.full((2, 2), 1.0), np.full((2, 2), 1.0)]
    res = [np.full((2, 2), 0.2), np.full((2, 2), 0.4)]
    fp = estimate_fingerprint(imgs, res)
    assert np.allclose(fp.plane, 0.3)


def test_zero_denominator_pixels_are_zero():
    img = np.ones((4, 4))
    img[:, 2] = 0.0  # fully dark column
    res = np.full((4, 4), 0.1)
    fp = estimate_fingerprint([img], [res])
    assert np.all(fp.plane[:, 2] == 0.0)
    assert np.allclose(fp.plane[:, 0], 0.1)


def test_saturation_exclusion():
    bright = np.full((4, 4), 1.0)
    bright[0, 0] = 0.5
    res = np.full((4, 4), 0.2)
    fp = estimate_fingerprint([bright], [res], saturation_threshold=254 / 255)
    assert fp.plane[0, 0] == pytest.approx(0.4)
    assert np.all(fp.plane.ravel()[1:] == 0.0)  # saturated pixels excluded -> zero


def test_argument_errors():
    with pytest.raises(ValueError):
        estimate_fingerprint([], [])
    with pytest.raises(ValueError):
        estimate_fingerprint([np.ones((2, 2))], [])
    with pytest.raises(ShapeError):
        estimate_fingerprint([np.ones((2, 2))], [np.ones((3, 2))])


def test_residual_identity_gaussian():
    rng = np.random.default_rng(0)
    img = rng.random((32, 32))
    spec = DenoiserSpec("gaussian", sigma=1.0)
    res = residual(img, spec)
    from prnukit.denoise import apply_denoiser

    assert np.allclose(res + apply_denoiser(img, spec), img, atol=0)


def test_residual_correlates_with_multiplicative_pattern():
    rng = np.random.default_rng(1)
    k = rng.normal(0, 0.02, (128, 128))
    img = 0.5 * (1.0 + k)
    res = residual(img, DenoiserSpec("wavelet"))
    assert ncc(res, k) > 0.5


def test_estimate_recovers_planted_pattern_from_captures():
    sensor = synth_sensor(128, 128, strength=0.02, seed=21)
    spec = DenoiserSpec()
    imgs, res = [], []
    for i in range(15):
        raw = capture(synth_scene(128, 128, "flat", level=0.5), sensor, seed=300 + i)
        imgs.append(raw)
        res.append(residual(raw, spec))
    fp = clean_fingerprint(estimate_fingerprint(imgs, res))
    assert ncc(fp.plane, sensor.prnu) > 0.8


def test_scaling_residuals_scales_fingerprint_exactly():
    rng = np.random.default_rng(2)
    imgs = [rng.random((8, 8)) + 0.1 for _ in range(3)]
    res = [rng.standard_normal((8, 8)) for _ in range(3)]
    base = estimate_fingerprint(imgs, res).plane
    scaled = estimate_fingerprint(imgs, [2.0 * r for r in res]).plane
    assert np.array_equal(scaled, 2.0 * base)


def test_identical_images_match_single_image():
    rng = np.random.default_rng(3)
    img = rng.random((8, 8)) + 0.1
    res = rng.standard_normal((8, 8))
    one = estimate_fingerprint([img], [res]).plane
    four = estimate_fingerprint([img] * 4, [res] * 4).plane
    assert np.allclose(four, one, rtol=1e-14, atol=0)


@settings(max_examples=100)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    imgs = [rng.random((6, 6)) + 0.05 for _ in range(n)]
    res = [rng.standard_normal((6, 6)) for _ in range(n)]
    a = estimate_fingerprint(imgs, res).plane
    order = rng.permutation(n)
    b = estimate_fingerprint([imgs[i] for i in order], [res[i] for i in order]).plane
    assert np.allclose(a, b, rtol=1e-9, atol=1e-15)


def test_clean_removes_constant_rows():
    plane = np.array([[1.0] * 4, [2.0] * 4, [3.0] * 4])
    fp = clean_fingerprint(Fingerprint(plane))
    assert np.allclose(fp.plane, 0.0, atol=1e-15)


def test_clean_row_col_means_zero():
    rng = np.random.default_rng(4)
    fp = clean_fingerprint(Fingerprint(rng.random((17, 23))))
    assert np.abs(fp.plane.mean(axis=0)).max() < 1e-9
    assert np.abs(fp.plane.mean(axis=1)).max() < 1e-9


@settings(max_examples=100)
@given(st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**31))
def test_clean_idempotent(h, w, seed):
    plane = np.random.default_rng(seed).standard_normal((h, w))
    once = zero_mean_rows_cols(plane)
    twice = zero_mean_rows_cols(once)
    assert np.abs(twice - once).max() < 1e-12


def test_whiten_runs_and_preserves_shape():
    rng = np.random.default_rng(5)
    plane = zero_mean_rows_cols(rng.standard_normal((64, 64)))
    out = whiten_plane(plane)
    assert out.shape == plane.shape
    assert np.isfinite(out).all()
    flagged = clean_fingerprint(Fingerprint(plane), whiten=True)
    assert flagged.plane.shape == plane.shape


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    fp = Fingerprint(rng.standard_normal((9, 13)), "camX", "pipeY", 42)
    path = tmp_path / "fp.bin"
    save_fingerprint(fp, path)
    loaded = load_fingerprint(path)
    assert np.array_equal(loaded.plane, fp.plane)
    assert (loaded.camera_id, loaded.pipeline_id, loaded.n_sources) == ("camX", "pipeY", 42)


def test_file_layout(tmp_path):
    fp = Fingerprint(np.zeros((2, 3)), "c", "p", 5)
    path = tmp_path / "fp.bin"
    save_fingerprint(fp, path)
    data = path.read_bytes()
    assert data.startswith(b"PRNU1\nwidth=3\nheight=2\ncamera=c\npipeline=p\nn=5")
    assert b"\n--\n" in data
    assert len(data.split(b"\n--\n", 1)[1]) == 2 * 3 * 8


def test_load_rejects_corruption(tmp_path):
    fp = Fingerprint(np.zeros((4, 4)), "c", "p", 1)
    good = tmp_path / "good.bin"
    save_fingerprint(fp, good)
    raw = good.read_bytes()

    bad_magic = tmp_path / "bad_magic.bin"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        load_fingerprint(bad_magic)

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        load_fingerprint(truncated)

    inconsistent = tmp_path / "dims.bin"
    inconsistent.write_bytes(raw.replace(b"width=4", b"width=5"))
    with pytest.raises(FormatError):
        load_fingerprint(inconsistent)


def test_save_validation(tmp_path):
    with pytest.raises(ValueError):
        save_fingerprint(Fingerprint(np.zeros((2, 2)), n_sources=0), tmp_path / "x")
    with pytest.raises(ValueError):
        save_fingerprint(Fingerprint(np.zeros((2, 2)), camera_id="a\nb"), tmp_path / "x")
