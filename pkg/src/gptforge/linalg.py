"""Small dense linear-algebra helpers used by several modules.

Float routines work on ``float64`` arrays; the ``exact_*`` routines work on
object arrays of :class:`fractions.Fraction`.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import IllConditionedError, SingularMatrixError

DEFAULT_TOL = 1e-9
COND_LIMIT = 1e12


def default_tol() -> float:
    """Default numerical tolerance, overridable through ``GPTFORGE_TOL``."""
    raw = os.environ.get("GPTFORGE_TOL")
    if raw is None:
        return DEFAULT_TOL
    return float(raw)


def numerical_rank(mat: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def independent_rows(vectors: Sequence[Sequence[float]] | np.ndarray, tol: float = DEFAULT_TOL) -> list[int]:
    """Greedy, order-preserving choice of linearly independent rows.

    A row is kept when its component orthogonal to the previously kept rows
    is larger than ``tol`` relative to its own norm, so the first-seen
    vector always wins ties.
    """
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    basis: list[np.ndarray] = []
    chosen: list[int] = []
    for i, v in enumerate(vecs):
        norm = np.linalg.norm(v)
        if norm <= tol:
            continue
        r = v.copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for q in basis:
                r = r - (q @ r) * q
        rn = np.linalg.norm(r)
        if rn > tol * max(1.0, norm) * 10:
            basis.append(r / rn)
            chosen.append(i)
    return chosen


def checked_inverse(mat: np.ndarray, cond_limit: float = COND_LIMIT) -> tuple[np.ndarray, float]:
    """Invert a square matrix, refusing singular or badly conditioned input.

    Returns ``(inverse, condition_number)``.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise SingularMatrixError(f"matrix of shape {mat.shape} is not square")
    n = mat.shape[0]
    rank = numerical_rank(mat)
    if rank < n:
        raise SingularMatrixError(f"singular matrix: rank {rank} < {n}", rank=rank, expected=n)
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"condition number {cond:.3g} exceeds {cond_limit:.0e}", rank=rank, expected=n
        )
    inv = np.linalg.solve(mat, np.eye(n))
    return inv, cond


def orthonormal_span(vectors: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Columns of the returned matrix are an orthonormal basis of the row span."""
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    if vecs.size == 0:
        return np.zeros((vecs.shape[-1], 0))
    u, s, vt = np.linalg.svd(vecs, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return vt[:r].T


# ---------------------------------------------------------------------------
# exact rational arithmetic
# ---------------------------------------------------------------------------

def to_fractions(arr, max_denominator: int | None = None) -> np.ndarray:
    """Convert to an object array of Fractions.

    Floats are converted exactly unless ``max_denominator`` is given, in
    which case the closest fraction with bounded denominator is used.
    """
    a = np.asarray(arr, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        f = Fraction(v) if not isinstance(v, Fraction) else v
        if max_denominator is not None:
            f = f.limit_denominator(max_denominator)
        out[idx] = f
    return out


def exact_rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over the rationals; returns (rref, pivot columns)."""
    m = np.array(mat, dtype=object, copy=True)
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = next((i for i in range(r, rows) if m[i, c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] / m[r, c]
        for i in range(rows):
            if i != r and m[i, c] != 0:
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def exact_rank(mat: np.ndarray) -> int:
    return len(exact_rref(to_fractions(mat))[1])


def exact_independent_rows(mat: np.ndarray) -> list[int]:
    """First-seen maximal set of independent rows, computed exactly."""
    return exact_rref(to_fractions(np.asarray(mat, dtype=object).T))[1]


def exact_inverse(mat: np.ndarray) -> np.ndarray:
    m = to_fractions(mat)
    n = m.shape[0]
    aug = np.concatenate([m, to_fractions(np.eye(n, dtype=int))], axis=1)
    red, piv = exact_rref(aug)
    if piv[:n] != list(range(n)):
        raise SingularMatrixError(f"singular matrix: rank {len([p for p in piv if p < n])} < {n}")
    return red[:, n:]
