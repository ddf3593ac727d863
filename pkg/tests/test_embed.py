import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cxrbias.embed import (
    Embedding, TsneParams, calibrate_affinities, conditional_affinities, kl_divergence,
    kl_gradient, pairwise_sq_dists, pca_reduce, row_perplexities, student_t_affinities, tsne,
)
from cxrbias.errors import CalibrationError, NumericError, ParameterError

from oracles import joint_affinities


def _kl(P, Y):
    # KL from scratch, no shared helpers
    n = len(Y)
    num = np.array([[0.0 if i == j else 1.0 / (1.0 + np.sum((Y[i] - Y[j]) ** 2)) for j in range(n)]
                    for i in range(n)])
    Q = num / num.sum()
    m = P > 0
    return float(np.sum(P[m] * np.log(P[m] / Q[m])))


def test_row_perplexities_hit_target():
    X = np.random.default_rng(0).standard_normal((100, 10))
    Pc, _ = conditional_affinities(pairwise_sq_dists(X), 30.0)
    perp = row_perplexities(Pc)
    assert np.max(np.abs(perp / 30.0 - 1.0)) < 1e-3


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(2.0, 15.0))
def test_perplexity_calibration_property(seed, perplexity):
    X = np.random.default_rng(seed).standard_normal((40, 5))
    Pc, beta = conditional_affinities(pairwise_sq_dists(X), perplexity)
    assert np.all(beta > 0)
    np.testing.assert_allclose(Pc.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.diag(Pc) == 0)
    np.testing.assert_allclose(row_perplexities(Pc), perplexity, rtol=1e-3)


def test_joint_affinities_match_sigma_bisection_oracle():
    X = np.random.default_rng(3).standard_normal((12, 4))
    P = calibrate_affinities(pairwise_sq_dists(X), 4.0)
    np.testing.assert_allclose(P, joint_affinities(X, 4.0), atol=1e-9)
    assert P.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(P, P.T)


def test_pairwise_distances_are_exact_for_a_small_case():
    X = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 0.0]])
    np.testing.assert_allclose(pairwise_sq_dists(X), [[0, 25, 1], [25, 0, 20], [1, 20, 0]], atol=1e-12)


def test_kl_gradient_matches_central_differences():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 3))
    P = calibrate_affinities(pairwise_sq_dists(X), 2.5)
    Y = rng.standard_normal((6, 2))
    kl, grad = kl_gradient(P, Y)
    assert kl == pytest.approx(_kl(P, Y), rel=1e-12)
    h = 1e-5
    num = np.zeros_like(Y)
    for idx in np.ndindex(*Y.shape):
        Yp, Ym = Y.copy(), Y.copy()
        Yp[idx] += h
        Ym[idx] -= h
        num[idx] = (_kl(P, Yp) - _kl(P, Ym)) / (2 * h)
    rel = np.linalg.norm(grad - num) / np.linalg.norm(grad + num)
    assert rel < 1e-5


def test_student_t_affinities_normalise():
    Y = np.random.default_rng(2).standard_normal((7, 2))
    Q, num = student_t_affinities(Y)
    assert Q.sum() == pytest.approx(1.0)
    assert np.all(np.diag(Q) == 0) and np.all(num <= 1)


def test_kl_is_zero_for_identical_distributions():
    P = np.full((4, 4), 1 / 12)
    np.fill_diagonal(P, 0)
    assert kl_divergence(P, P) == pytest.approx(0.0, abs=1e-15)


def test_tsne_is_deterministic_and_centred():
    X = np.random.default_rng(5).standard_normal((30, 8))
    a = tsne(X, perplexity=8, seed=7, iters=300)
    b = tsne(X, perplexity=8, seed=7, iters=300)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.kl_trace == b.kl_trace
    np.testing.assert_allclose(a.points.mean(axis=0), 0, atol=1e-10)
    assert a.points.shape == (30, 2)
    assert len(a.kl_trace) == 30 and a.trace_iterations[-1] == 300


def test_tsne_kl_decreases_after_exaggeration():
    X = np.random.default_rng(8).standard_normal((40, 6))
    e = tsne(X, perplexity=10, seed=0, iters=600)
    assert e.kl_at(600) < e.kl_at(260)


def test_tsne_separates_well_separated_clusters():
    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(0, 1, (25, 10)), rng.normal(12, 1, (25, 10))])
    Y = tsne(X, perplexity=10, seed=1, iters=500).points
    ca, cb = Y[:25].mean(axis=0), Y[25:].mean(axis=0)
    spread = max(np.linalg.norm(Y[:25] - ca, axis=1).max(), np.linalg.norm(Y[25:] - cb, axis=1).max())
    assert np.linalg.norm(ca - cb) > spread


def test_pca_reduce_shape_and_sign_convention():
    X = np.random.default_rng(0).standard_normal((20, 6))
    Z = pca_reduce(X, 3)
    assert Z.shape == (20, 3)
    assert np.all(Z[np.argmax(np.abs(Z), axis=0), range(3)] > 0)
    np.testing.assert_array_equal(pca_reduce(-X, 3), Z)


def test_params_round_trip():
    p = TsneParams(perplexity=12, iterations=50, momentum=(0.4, 0.9))
    assert TsneParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p


def test_embedding_writers(tmp_path):
    e = Embedding(np.array([[0.5, -1.0], [1.0, 2.0]]), [0.3, 0.2], seed=0)
    text = e.write_csv(tmp_path / "e.csv", ["A", "B"], ["x", "y"]).read_text()
    assert text.splitlines() == ["index,x,y,dataset,label", "0,0.5,-1.0,A,x", "1,1.0,2.0,B,y"]
    assert json.loads(e.write_trace(tmp_path / "t.json").read_text()) == [0.3, 0.2]


@pytest.mark.parametrize("perp", [1.0, 10.0, 0.5])
def test_perplexity_out_of_range(perp):
    with pytest.raises(ParameterError):
        conditional_affinities(pairwise_sq_dists(np.eye(10)), perp)


def test_identical_points_cannot_be_calibrated():
    with pytest.raises(CalibrationError):
        conditional_affinities(np.zeros((6, 6)), 3.0)


def test_bad_inputs():
    with pytest.raises(ParameterError):
        tsne(np.zeros((3, 2)))
    with pytest.raises(NumericError):
        pairwise_sq_dists(np.array([[0.0, np.inf], [1.0, 1.0]]))
