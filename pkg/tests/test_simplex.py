from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gptforge.embed.simplex import membership_residual, solve_feasibility
from gptforge.linalg import to_fractions


def assert_farkas(A, b, y, tol=1e-9):
    """Independent check: y A <= 0 and y b > 0 proves {x >= 0, A x = b} empty."""
    y = np.asarray(y, dtype=float)
    assert np.max(y @ A) <= tol
    assert y @ b > tol


def test_small_infeasible_instance():
    A = np.array([[1.0, 1.0], [1.0, -1.0]])
    b = np.array([1.0, 3.0])
    res = solve_feasibility(A, b)
    assert not res.feasible
    assert_farkas(A, b, res.y)


def test_exact_mode_returns_rational_solution():
    A = np.array([[1, 1], [1, -1]])
    res = solve_feasibility(A, np.array([1, Fraction(1, 2)]), exact=True)
    assert res.feasible and res.exact
    assert list(res.x) == [Fraction(3, 4), Fraction(1, 4)]


def test_redundant_rows_are_removed():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    assert solve_feasibility(A, np.array([1.0, 2.0, 1.0])).feasible
    res = solve_feasibility(A, np.array([1.0, 3.0, 1.0]))
    assert not res.feasible
    assert_farkas(A, np.array([1.0, 3.0, 1.0]), res.y)


def test_negative_rhs_handled():
    A = np.array([[-1.0, 0.0], [0.0, 1.0]])
    res = solve_feasibility(A, np.array([-2.0, 1.0]))
    assert res.feasible
    assert np.allclose(res.x, [2.0, 1.0])


instances = st.tuples(st.integers(1, 5), st.integers(1, 8), st.integers(0, 10**6))


@given(instances)
def test_planted_feasible_instances(params):
    m, n, seed = params
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.uniform(0, 1, size=n) * (rng.uniform(size=n) < 0.6)
    b = A @ x0
    res = solve_feasibility(A, b)
    assert res.feasible
    assert np.min(res.x) >= -1e-12
    assert np.max(np.abs(A @ res.x - b)) <= 1e-8


@given(instances)
def test_every_verdict_carries_a_checkable_certificate(params):
    m, n, seed = params
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-3, 4, size=m).astype(float)
    res = solve_feasibility(A, b)
    if res.feasible:
        assert np.min(res.x) >= -1e-12 and np.max(np.abs(A @ res.x - b)) <= 1e-8
    else:
        assert_farkas(A, b, res.y)


@given(instances)
def test_exact_and_float_verdicts_agree(params):
    m, n, seed = params
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n))
    b = rng.integers(-3, 4, size=m)
    f = solve_feasibility(A.astype(float), b.astype(float))
    e = solve_feasibility(to_fractions(A), to_fractions(b), exact=True)
    assert f.feasible == e.feasible
    if e.feasible:
        assert all(v >= 0 for v in e.x)
        assert list(to_fractions(A) @ e.x) == list(to_fractions(b))
    else:
        y = np.array(e.y, dtype=object)
        assert max(y @ to_fractions(A)) <= 0 and y @ to_fractions(b) > 0


def test_membership_residual():
    rays = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert membership_residual(rays, np.array([0.3, 0.2])) <= 1e-12
    assert membership_residual(rays, np.array([-0.3, 0.2])) > 0.1
