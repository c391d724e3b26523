import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import planted_lp
from sparselab.errors import DimensionError, InvalidParameterError
from sparselab.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, StandardFormLP, simplex_solve


def solve(c, A, b):
    return simplex_solve(StandardFormLP(c=np.asarray(c, float), A=np.atleast_2d(np.asarray(A, float)),
                                        b=np.asarray(b, float)))


def test_simple_optimum():
    res = solve([1, 1], [[1, 1]], [1])
    assert res.status == OPTIMAL and res.objective == pytest.approx(1.0)


def test_infeasible():
    assert solve([1], [[1]], [-1]).status == INFEASIBLE


def test_unbounded():
    # min -x1 s.t. x1 - x2 = 0
    assert solve([-1, 0], [[1, -1]], [0]).status == UNBOUNDED


def test_validation():
    with pytest.raises(DimensionError):
        StandardFormLP(c=np.ones(2), A=np.ones((1, 3)), b=np.ones(1))
    with pytest.raises(InvalidParameterError):
        StandardFormLP(c=np.ones(1), A=np.ones((1, 1)), b=np.array([np.inf]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 10))
def test_planted_dual_certificate(seed, m, extra):
    rng = np.random.default_rng(seed)
    c, A, b, x, opt = planted_lp(rng, m, m + extra)
    res = solve(c, A, b)
    assert res.status == OPTIMAL
    assert abs(res.objective - opt) <= 1e-8 * (1 + abs(opt))
    assert np.all(res.x >= -1e-9)
    assert np.max(np.abs(A @ res.x - b)) <= 1e-8 * (1 + np.max(np.abs(b)))
    assert res.duality_gap <= 1e-8 * (1 + abs(opt))


def test_degenerate_lp_terminates():
    # classic cycling-prone structure (many ties at zero rhs)
    A = np.array([[0.5, -5.5, -2.5, 9, 1, 0, 0], [0.5, -1.5, -0.5, 1, 0, 1, 0], [1, 0, 0, 0, 0, 0, 1]])
    c = np.array([-10, 57, 9, 24, 0, 0, 0], float)
    res = solve(c, A, [0, 0, 1])
    assert res.status == OPTIMAL and res.objective == pytest.approx(-1.0)
