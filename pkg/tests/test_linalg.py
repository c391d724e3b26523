import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import naive_residual_correlations
from sparselab.errors import DimensionError, InvalidParameterError
from sparselab.linalg import gram, norm_lp, read_matrix, residual_correlations, write_matrix

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 20), elements=finite)


def test_norm_examples():
    assert norm_lp([3, -4], 2) == 5.0
    assert norm_lp([3, -4], math.inf) == 4.0
    assert norm_lp([1, 1, 1], 1) == 3.0


def test_norm_general_p_matches_direct_formula():
    v = np.array([0.5, -2.0, 3.0])
    assert norm_lp(v, 3) == pytest.approx(np.sum(np.abs(v) ** 3) ** (1 / 3), rel=1e-14)


def test_norm_rejects_p_below_one():
    with pytest.raises(InvalidParameterError):
        norm_lp([1.0], 0.5)


def test_norm_rejects_nonfinite():
    with pytest.raises(InvalidParameterError):
        norm_lp([1.0, math.nan])


@given(vectors)
def test_norm_nonincreasing_in_p(v):
    n1, n2, ninf = norm_lp(v, 1), norm_lp(v, 2), norm_lp(v, math.inf)
    assert n1 >= n2 * (1 - 1e-12) - 1e-300
    assert n2 >= ninf * (1 - 1e-12) - 1e-300


@given(vectors)
def test_l1_at_most_sqrt_d_l2(v):
    assert norm_lp(v, 1) <= math.sqrt(v.size) * norm_lp(v, 2) * (1 + 1e-12) + 1e-300


def test_gram_examples():
    X = math.sqrt(2) * np.eye(2)
    assert np.allclose(gram(X), np.eye(2), atol=1e-15)
    col = np.array([[1.0], [-1.0], [1.0]])
    assert gram(np.hstack([col, col]))[0, 1] == 1.0
    assert gram(np.ones((2, 1)))[0, 0] == 1.0


@settings(max_examples=50)
@given(st.integers(1, 12), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_gram_unit_diagonal_for_normalized_columns(n, M, seed):
    X = np.random.default_rng(seed).choice((-1.0, 1.0), size=(n, M))
    G = gram(X)
    assert np.all(np.abs(np.diag(G) - 1) <= 1e-12)
    assert np.array_equal(G, G.T)


def test_residual_correlations_examples():
    X = math.sqrt(2) * np.eye(2)
    theta = np.array([1.0, -2.0])
    assert np.allclose(residual_correlations(X, X @ theta, theta), 0.0)
    Y = np.array([math.sqrt(2) * 3, math.sqrt(2) * 0.5])
    assert np.allclose(residual_correlations(X, Y, np.zeros(2)), [3.0, 0.5], atol=1e-15)


def test_residual_correlations_matches_naive_loops():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((4, 3))
    y = rng.standard_normal(4)
    theta = rng.standard_normal(3)
    expected = naive_residual_correlations(X.tolist(), y.tolist(), theta.tolist())
    assert np.allclose(residual_correlations(X, y, theta), expected, rtol=1e-14, atol=1e-15)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_residual_correlations_linear_in_y(seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((5, 3))
    y1, y2 = rng.standard_normal(5), rng.standard_normal(5)
    z = np.zeros(3)
    lhs = residual_correlations(X, a * y1 + b * y2, z)
    rhs = a * residual_correlations(X, y1, z) + b * residual_correlations(X, y2, z)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_residual_correlations_dimension_errors():
    X = np.ones((3, 2))
    with pytest.raises(DimensionError):
        residual_correlations(X, np.ones(4), np.ones(2))
    with pytest.raises(DimensionError):
        residual_correlations(X, np.ones(3), np.ones(3))


def test_matrix_file_roundtrip_is_exact(tmp_path):
    X = np.random.default_rng(0).standard_normal((5, 3))
    p = tmp_path / "m.txt"
    write_matrix(p, X)
    assert p.read_text().splitlines()[0] == "5 3"
    assert np.array_equal(read_matrix(p), X)


def test_read_matrix_rejects_bad_shape(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2\n1 2\n3\n")
    with pytest.raises(DimensionError):
        read_matrix(p)
