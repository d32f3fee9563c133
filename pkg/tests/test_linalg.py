from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gptforge.errors import IllConditionedError, SingularMatrixError
from gptforge.linalg import (
    checked_inverse, default_tol, exact_independent_rows, exact_inverse, exact_rank, exact_rref,
    independent_rows, numerical_rank, orthonormal_span, to_fractions,
)

small_int_matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), min_size=1, max_size=6)
)


def test_default_tol_reads_environment(monkeypatch):
    monkeypatch.delenv("GPTFORGE_TOL", raising=False)
    assert default_tol() == 1e-9
    monkeypatch.setenv("GPTFORGE_TOL", "1e-7")
    assert default_tol() == 1e-7


def test_independent_rows_keeps_first_seen():
    rows = [[1, 0, 0], [2, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]]
    assert independent_rows(rows) == [0, 2, 4]


def test_checked_inverse_reports_rank():
    with pytest.raises(SingularMatrixError, match="rank 1 < 2") as err:
        checked_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert err.value.rank == 1 and err.value.expected == 2


def test_checked_inverse_refuses_ill_conditioned():
    with pytest.raises(IllConditionedError):
        checked_inverse(np.diag([1.0, 1e-8]), cond_limit=1e6)
    inv, cond = checked_inverse(np.diag([2.0, 4.0]))
    assert np.allclose(inv, np.diag([0.5, 0.25])) and cond == pytest.approx(2.0)


def test_orthonormal_span():
    q = orthonormal_span(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]))
    assert q.shape == (3, 1)
    assert np.allclose(np.abs(q[:, 0]), [2**-0.5, 2**-0.5, 0])


def test_exact_inverse_matches_fractions():
    m = to_fractions(np.array([[2, 1], [1, 1]]))
    inv = exact_inverse(m)
    assert inv.tolist() == [[Fraction(1), Fraction(-1)], [Fraction(-1), Fraction(2)]]


def test_to_fractions_limits_denominator():
    f = to_fractions(np.array([0.1 + 1e-17, 1 / 3]), max_denominator=100)
    assert f.tolist() == [Fraction(1, 10), Fraction(1, 3)]


@given(small_int_matrices)
def test_exact_rank_agrees_with_svd_on_integer_matrices(rows):
    m = np.array(rows, dtype=float)
    assert exact_rank(m) == numerical_rank(m) == np.linalg.matrix_rank(m)


@given(small_int_matrices)
def test_exact_independent_rows_span(rows):
    m = np.array(rows, dtype=float)
    idx = exact_independent_rows(m)
    assert len(idx) == np.linalg.matrix_rank(m)
    if idx:
        assert np.linalg.matrix_rank(m[idx]) == len(idx)


def test_exact_rref_pivots():
    red, piv = exact_rref(to_fractions(np.array([[1, 2, 3], [2, 4, 7]])))
    assert piv == [0, 2]
    assert red[0, 1] == 2 and red[1, 2] == 1
