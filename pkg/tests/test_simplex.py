import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from wkam.simplex import LPError, revised_simplex, solve_lp


def _random_feasible_lp(rng, m, n, redundant=0):
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0.1, 1.0, size=n)
    if redundant:
        A = np.vstack([A, rng.normal(size=(redundant, m)) @ A])
    b = A @ x0
    c = rng.uniform(0.1, 2.0, size=n)  # positive costs keep the LP bounded
    return c, A, b


def test_small_lp_by_hand():
    # min x + 2y  s.t. x + y = 1
    res = solve_lp(np.array([1.0, 2.0]), np.array([[1.0, 1.0]]), np.array([1.0]), backend="simplex")
    assert res.x == pytest.approx([1.0, 0.0])
    assert res.fun == pytest.approx(1.0)


def test_free_variables_are_split():
    # min x  s.t. x - y = -3, y in [0, inf), x free  ->  x = -3
    res = solve_lp(np.array([1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([-3.0]), free=[True, False], backend="simplex")
    assert res.x[0] == pytest.approx(-3.0)


def test_infeasible_detected():
    A = np.array([[1.0, 1.0]])
    with pytest.raises(LPError) as e:
        solve_lp(np.array([1.0, 1.0]), A, np.array([-1.0]), backend="simplex")
    assert e.value.status == "infeasible"
    with pytest.raises(LPError):
        solve_lp(np.array([1.0, 1.0]), A, np.array([-1.0]), backend="highs")


def test_unbounded_detected():
    with pytest.raises(LPError) as e:
        solve_lp(np.array([-1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0]), backend="simplex")
    assert e.value.status == "unbounded"


def test_residuals_reported(rng):
    c, A, b = _random_feasible_lp(rng, 5, 12)
    for backend in ("simplex", "highs"):
        res = solve_lp(c, A, b, backend=backend)
        assert res.primal_residual <= 1e-9
        assert res.backend == backend


def test_sparse_input_accepted(rng):
    c, A, b = _random_feasible_lp(rng, 4, 9)
    r1 = solve_lp(c, sp.csr_matrix(A), b, backend="simplex")
    r2 = solve_lp(c, A, b, backend="highs")
    assert r1.fun == pytest.approx(r2.fun, abs=1e-8)


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve_lp(np.ones(1), np.ones((1, 1)), np.ones(1), backend="glpk")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(0, 2))
def test_simplex_agrees_with_highs(seed, m, redundant):
    rng = np.random.default_rng(seed)
    c, A, b = _random_feasible_lp(rng, m, m + 5, redundant)
    r1 = solve_lp(c, A, b, backend="simplex")
    r2 = solve_lp(c, A, b, backend="highs")
    assert r1.fun == pytest.approx(r2.fun, abs=1e-7 * (1 + abs(r2.fun)))
    assert np.all(r1.x >= -1e-12)
    assert np.max(np.abs(A @ r1.x - b)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_degenerate_assignment_problems(seed):
    # 3x3 assignment polytope is highly degenerate
    rng = np.random.default_rng(seed)
    n = 3
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n:(i + 1) * n] = 1
        A[n + i, i::n] = 1
    b = np.ones(2 * n)
    c = rng.integers(0, 3, size=n * n).astype(float)
    x, _ = revised_simplex(c, A, b)
    ref = solve_lp(c, A, b, backend="highs")
    assert c @ x == pytest.approx(ref.fun, abs=1e-9)
