import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cxrbias.errors import ParameterError
from cxrbias.imgproc.enhance import (
    clahe, gamma, gaussian_blur, gaussian_kernel, hist_eq, quantize, unsharp,
)

import oracles

images = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(2, 12)),
                elements=st.integers(0, 255).map(lambda v: v / 255.0))


def test_quantize_rounds_half_up():
    np.testing.assert_array_equal(quantize(np.array([0.0, 0.5 / 255, 1.49 / 255, 1.0])), [0, 1, 1, 255])


@settings(max_examples=40, deadline=None)
@given(images)
def test_hist_eq_matches_reference(img):
    np.testing.assert_allclose(hist_eq(img), oracles.hist_eq(img), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(images)
def test_hist_eq_is_monotone(img):
    out = hist_eq(img)
    order = np.argsort(img, axis=None, kind="stable")
    assert np.all(np.diff(out.ravel()[order]) >= 0)
    assert out.min() >= 0 and out.max() <= 1


def test_hist_eq_spreads_to_full_range():
    img = np.array([[0.2, 0.2], [0.3, 0.4]])
    np.testing.assert_allclose(hist_eq(img), [[0, 0], [0.5, 1.0]])


def test_hist_eq_constant_image_unchanged():
    img = np.full((4, 5), 0.37)
    np.testing.assert_array_equal(hist_eq(img), img)


@pytest.mark.parametrize("shape,clip,tiles", [((32, 32), 4.0, (4, 4)), ((37, 29), 2.0, (3, 5)),
                                              ((16, 16), 100.0, (2, 2)), ((20, 24), 3.0, (1, 1))])
def test_clahe_matches_per_tile_reference(shape, clip, tiles):
    img = np.random.default_rng(sum(shape)).integers(0, 256, shape) / 255.0
    np.testing.assert_allclose(clahe(img, clip, tiles), oracles.clahe(img, clip, tiles), atol=1e-12)


def test_clahe_single_tile_without_clipping_is_hist_eq():
    img = np.random.default_rng(3).integers(0, 200, (16, 16)) / 255.0
    np.testing.assert_allclose(clahe(img, 1e9, (1, 1)), hist_eq(img), atol=1e-12)


def test_clahe_on_constant_image_is_identity():
    img = np.full((16, 16), 0.6)
    np.testing.assert_allclose(clahe(img, 4.0, (4, 4)), img)


def test_clahe_parameter_checks():
    with pytest.raises(ParameterError):
        clahe(np.zeros((8, 8)), 0.0)
    with pytest.raises(ParameterError):
        clahe(np.zeros((8, 8)), 4.0, (0, 2))
    with pytest.raises(ParameterError):
        clahe(np.zeros((4, 4)), 4.0, (8, 8))


def test_gamma_direction_and_identity():
    img = np.linspace(0, 1, 11).reshape(1, -1)
    assert np.all(gamma(img, 2.0)[0, 1:-1] > img[0, 1:-1])
    assert np.all(gamma(img, 0.5)[0, 1:-1] < img[0, 1:-1])
    np.testing.assert_array_equal(gamma(img, 1.0), img)
    np.testing.assert_allclose(gamma(np.array([[0.25]]), 2.0), [[0.5]])
    with pytest.raises(ParameterError):
        gamma(img, 0)


@pytest.mark.parametrize("sigma", [0.6, 1.0, 2.5])
def test_gaussian_kernel_matches_reference(sigma):
    np.testing.assert_allclose(gaussian_kernel(sigma), oracles.gaussian_taps(sigma), atol=1e-15)


def test_gaussian_impulse_response():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    taps = oracles.gaussian_taps(1.5)
    out = gaussian_blur(img, 1.5)
    r = len(taps) // 2
    np.testing.assert_allclose(out[10 - r:11 + r, 10 - r:11 + r], np.outer(taps, taps), atol=1e-6)
    assert out.sum() == pytest.approx(1.0)
    assert out[:10 - r].max() == 0 and out[11 + r:].max() == 0


def test_blur_boundaries_are_half_sample_mirrored():
    row = np.random.default_rng(4).random(9)
    img = np.tile(row, (5, 1))
    np.testing.assert_allclose(gaussian_blur(img, 1.2)[2], oracles.blur_1d(row, 1.2), atol=1e-12)


def test_blur_preserves_constant_images():
    np.testing.assert_allclose(gaussian_blur(np.full((7, 9), 0.3), 2.0), 0.3)


def test_unsharp_amplifies_edges_and_clamps():
    img = np.zeros((9, 9))
    img[:, 5:] = 0.8
    out = unsharp(img, 1.0, 1.0)
    assert out[4, 5] > 0.8 and out[4, 4] == 0.0
    assert out.min() >= 0 and out.max() <= 1
    np.testing.assert_array_equal(unsharp(img, 1.0, 0.0), img)
    with pytest.raises(ParameterError):
        unsharp(img, 0.0)
