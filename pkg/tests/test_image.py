import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from cxrbias.errors import DecodeError, ParameterError, ShapeError
from cxrbias.imgproc.image import (
    as_gray, as_mask, load_image, load_mask, resample_matrix, resize, save_mask, save_png, to_uint8,
)

from oracles import bilinear_resize


@pytest.mark.parametrize("shape,target", [((9, 7), (4, 5)), ((5, 6), (11, 13)), ((8, 8), (8, 8)),
                                          ((12, 10), (3, 3))])
def test_bilinear_matches_brute_force(shape, target):
    img = np.random.default_rng(0).random(shape)
    w, h = target
    np.testing.assert_allclose(resize(img, w, h, "bilinear"), bilinear_resize(img, w, h), atol=1e-12)


@pytest.mark.parametrize("method", ["bilinear", "bicubic", "nearest"])
def test_resample_rows_sum_to_one(method):
    for n_in, n_out in [(10, 3), (3, 10), (7, 7)]:
        np.testing.assert_allclose(resample_matrix(n_in, n_out, method).sum(axis=1), 1.0)


def test_same_size_resize_is_identity():
    img = np.random.default_rng(1).random((6, 9))
    for method in ("bilinear", "bicubic", "nearest"):
        np.testing.assert_allclose(resize(img, 9, 6, method), img, atol=1e-15)


def test_bicubic_reproduces_linear_ramps_away_from_edges():
    # taps reach two source pixels (8 output pixels at 4x); edge taps are dropped and renormalised
    ramp = np.tile(np.linspace(0.1, 0.9, 16), (16, 1))
    up = resize(ramp, 64, 64, "bicubic")
    x = (np.arange(64) + 0.5) / 4 - 0.5
    expected = np.tile(0.1 + 0.8 * x / 15, (64, 1))
    np.testing.assert_allclose(up[8:-8, 8:-8], expected[8:-8, 8:-8], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12))
def test_resize_stays_in_range(h, w, th, tw):
    img = np.random.default_rng(h * 100 + w).random((h, w))
    for method in ("bilinear", "bicubic"):
        out = resize(img, tw, th, method)
        assert out.shape == (th, tw) and out.min() >= 0 and out.max() <= 1


def test_png_round_trip_is_exact_on_the_8bit_grid(tmp_path):
    img = np.random.default_rng(2).integers(0, 256, (5, 7)) / 255.0
    back = load_image(save_png(img, tmp_path / "a.png"))
    np.testing.assert_array_equal(back, img)
    np.testing.assert_array_equal(to_uint8(img), np.rint(img * 255))


def test_16bit_png_normalised(tmp_path):
    arr = np.array([[0, 65535], [32768, 1000]], dtype=np.uint16)
    Image.fromarray(arr).save(tmp_path / "d.png")
    np.testing.assert_allclose(load_image(tmp_path / "d.png"), arr / 65535.0)


def test_rgb_png_uses_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[1, 1] = (255, 255, 255)
    Image.fromarray(rgb).save(tmp_path / "c.png")
    img = load_image(tmp_path / "c.png")
    assert img[0, 0] == pytest.approx(0.299, abs=1 / 255)
    assert img[1, 1] == pytest.approx(1.0)


def test_mask_round_trip(tmp_path):
    m = np.zeros((4, 4), dtype=bool)
    m[1:3, 2] = True
    np.testing.assert_array_equal(load_mask(save_mask(m, tmp_path / "m.png")), m)


def test_undecodable_file(tmp_path):
    p = tmp_path / "bad.png"
    p.write_bytes(b"not a png")
    with pytest.raises(DecodeError):
        load_image(p)


def test_validation_helpers():
    with pytest.raises(ShapeError):
        as_gray(np.zeros(3))
    with pytest.raises(ParameterError):
        as_gray(np.full((2, 2), 1.5))
    with pytest.raises(ParameterError):
        as_mask(np.full((2, 2), 2))
    with pytest.raises(ParameterError):
        resize(np.zeros((3, 3)), 0, 2)
    with pytest.raises(ParameterError):
        resize(np.zeros((3, 3)), 2, 2, "lanczos")
