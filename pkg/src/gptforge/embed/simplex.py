"""Dense phase-1 simplex for feasibility problems ``A x = b, x >= 0``.

In exact mode Bland's rule is used for both the entering and the leaving
variable, which guarantees termination. In floating point, pricing is
Dantzig's rule (most negative reduced cost) with a ratio test that prefers the
largest pivot among ties; after a long run of degenerate pivots the
right-hand side is perturbed once by a tiny deterministic amount to break the
degeneracy. The final primal and dual values are always recomputed from the
unperturbed data of the final basis. With ``exact=True`` the tableau
holds :class:`fractions.Fraction` entries and all comparisons are exact.

On infeasibility a Farkas vector ``y`` is returned with ``A^T y <= 0`` and
``b^T y > 0``. It is read off the phase-1 reduced costs of the artificial
columns (for artificial ``i`` the reduced cost is ``1 - y_i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import EmbeddingError
from ..linalg import DEFAULT_TOL, exact_rref, independent_rows, to_fractions

EXACT_MAX_VARIABLES = 200
MAX_PIVOTS = 200_000
PIVOT_REL_TOL = 1e-7
DEGENERATE_RUN = 20   # times the row count: consecutive degenerate pivots before perturbing
PERTURBATION = 1e-3   # relative to tol


@dataclass
class LPResult:
    feasible: bool
    x: np.ndarray | None          # primal solution when feasible
    y: np.ndarray | None          # Farkas vector (in the original row space) when infeasible
    phase1_value: float
    pivots: int
    exact: bool = False


def _reduce_rows(A, b, tol, exact):
    """Drop linearly dependent rows of ``A``.

    Returns ``(kept_rows, farkas_or_None)``; a Farkas vector is produced when
    a dependent row carries an inconsistent right-hand side.
    """
    m = A.shape[0]
    if exact:
        kept = exact_rref(A.T)[1]
    else:
        kept = independent_rows(A, tol)
    dropped = [i for i in range(m) if i not in kept]
    if not dropped:
        return kept, None
    Ak = A[kept]
    for k in dropped:
        if exact:
            # solve Ak^T t = A_k exactly
            aug = np.concatenate([Ak.T, A[k][:, None]], axis=1)
            red, piv = exact_rref(aug)
            t = np.array([Fraction(0)] * len(kept), dtype=object)
            for row, c in enumerate(piv):
                if c < len(kept):
                    t[c] = red[row, -1]
            gap = b[k] - t @ b[kept]
            inconsistent = gap != 0
        else:
            t, *_ = np.linalg.lstsq(Ak.T, A[k], rcond=None)
            gap = b[k] - t @ b[kept]
            inconsistent = abs(gap) > tol * max(1.0, float(np.max(np.abs(b))))
        if inconsistent:
            y = np.zeros(m, dtype=object if exact else float)
            if exact:
                y[:] = Fraction(0)
            sgn = 1 if gap > 0 else -1
            y[k] = sgn
            for idx, i in enumerate(kept):
                y[i] = -sgn * t[idx]
            return kept, y
    return kept, None


def solve_feasibility(A, b, *, exact: bool = False, tol: float = DEFAULT_TOL) -> LPResult:
    """Decide whether ``A x = b`` has a solution with ``x >= 0``."""
    if exact:
        A = to_fractions(np.atleast_2d(A))
        b = to_fractions(np.asarray(b).ravel())
        if A.shape[1] > EXACT_MAX_VARIABLES:
            raise EmbeddingError(
                f"exact mode supports at most {EXACT_MAX_VARIABLES} variables, got {A.shape[1]}"
            )
        zero, one, eps = Fraction(0), Fraction(1), Fraction(0)
    else:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        zero, one = 0.0, 1.0
        scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
        eps = tol * scale
    m_all, n = A.shape
    if b.shape[0] != m_all:
        raise ValueError(f"A has {m_all} rows but b has {b.shape[0]} entries")

    kept, y_dep = _reduce_rows(A, b, tol, exact)
    if y_dep is not None:
        return LPResult(False, None, y_dep, float("inf"), 0, exact)
    Ar, br = A[kept], b[kept]
    m = Ar.shape[0]

    sign = np.array([-1 if v < 0 else 1 for v in br], dtype=object if exact else float)
    Ar = Ar * sign[:, None]
    br = br * sign

    if exact:
        eye = to_fractions(np.eye(m, dtype=int))
    else:
        eye = np.eye(m)
    T = np.concatenate([Ar, eye, br[:, None]], axis=1)
    # reduced-cost row for phase 1: costs 0 on x, 1 on artificials
    z = np.concatenate([-Ar.sum(axis=0), np.array([zero] * m, dtype=T.dtype), np.array([-br.sum()], dtype=T.dtype)])
    basis = list(range(n, n + m))

    pivots = 0
    perturbed = False
    degenerate_run = 0
    blocked: set[int] = set()   # columns with no usable pivot at the current basis
    while True:
        if exact:
            entering = next((j for j in range(n) if z[j] < -eps and j not in blocked), None)
        else:
            zc = np.array(z[:n], dtype=float)
            if blocked:
                zc[list(blocked)] = 0.0
            j = int(np.argmin(zc)) if n else 0
            entering = j if n and zc[j] < -eps else None
        if entering is None:
            break
        col = T[:, entering]
        if exact:
            rows = [i for i in range(m) if col[i] > 0]
        else:
            # relative pivot tolerance keeps the tableau well conditioned
            piv_tol = max(eps, PIVOT_REL_TOL * float(np.max(np.abs(col))))
            rows = [i for i in range(m) if col[i] > piv_tol]
        if not rows:
            # only possible through rounding: the column is numerically zero where it matters
            blocked.add(entering)
            continue
        blocked.clear()
        ratios = {i: T[i, -1] / col[i] for i in rows}
        lo = min(ratios.values())
        if exact:
            ties = [i for i in rows if ratios[i] - lo <= (zero if exact else eps)]
            r = min(ties, key=lambda i: basis[i])
        else:
            ties = [i for i in rows if ratios[i] - lo <= eps]
            r = max(ties, key=lambda i: col[i])
        degenerate_run = degenerate_run + 1 if ratios[r] <= eps else 0
        if not exact and not perturbed and degenerate_run > DEGENERATE_RUN * max(m, 1):
            noise = np.random.default_rng(0).uniform(0.5, 1.0, size=m) * PERTURBATION * tol
            T[:, -1] += noise
            z[-1] -= sum(noise[i] for i in range(m) if basis[i] >= n)
            perturbed = True
        piv = T[r, entering]
        T[r] = T[r] / piv
        factors = T[:, entering].copy()
        factors[r] = zero
        T -= np.outer(factors, T[r]) if not exact else _outer(factors, T[r])
        z = z - z[entering] * T[r]
        if not exact:
            T[np.abs(T) < 1e-14 * scale] = 0.0
            T[:, -1] = np.maximum(T[:, -1], 0.0)
            z[np.abs(z) < 1e-14 * scale] = 0.0
        basis[r] = entering
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise EmbeddingError("simplex pivot limit reached; retry with exact=True")

    value = -z[-1]
    feas_tol = zero if exact else tol * max(1.0, float(np.max(np.abs(br))) if m else 1.0)
    if not exact:
        # recompute primal and dual values from the original data of the final basis
        full = np.concatenate([Ar, np.eye(m)], axis=1)
        Bm = full[:, basis]
        cB = np.array([1.0 if j >= n else 0.0 for j in basis])
        try:
            xB = np.linalg.solve(Bm, br)
            yB = np.linalg.solve(Bm.T, cB)
        except np.linalg.LinAlgError:
            xB, yB = T[:, -1], np.array([1.0 - z[n + i] for i in range(m)])
        value = float(cB @ np.maximum(xB, 0.0))
    if value <= feas_tol:
        x = np.array([zero] * n, dtype=object if exact else float)
        for i, bv in enumerate(basis):
            if bv < n:
                x[bv] = T[i, -1] if exact else max(xB[i], 0.0)
        return LPResult(True, x, None, float(value), pivots, exact)

    if exact:
        y_red = np.array([one - z[n + i] for i in range(m)], dtype=object)
    else:
        y_red = yB
    y_red = y_red * sign
    y = np.array([zero] * m_all, dtype=object if exact else float)
    for idx, i in enumerate(kept):
        y[i] = y_red[idx]
    return LPResult(False, None, y, float(value), pivots, exact)


def _outer(u, v):
    out = np.empty((len(u), len(v)), dtype=object)
    for i, ui in enumerate(u):
        out[i] = v * ui if ui != 0 else Fraction(0) * v
    return out


def membership_residual(rays_as_columns: np.ndarray, x: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Phase-1 optimum for ``R lam = x, lam >= 0``; zero iff ``x`` is in the cone."""
    R = np.atleast_2d(np.asarray(rays_as_columns, dtype=float))
    res = solve_feasibility(R, np.asarray(x, dtype=float), tol=tol)
    if res.feasible:
        return 0.0
    return float(res.phase1_value) if np.isfinite(res.phase1_value) else float(np.max(np.abs(x)))


