"""Polyhedral cones given by generators, and their duals.

The dual of ``cone(rays)`` is ``{y : y . x >= 0 for every ray x}``. Its
generators are enumerated with the double description method: constraints
are inserted one at a time, and a new ray is formed from a positive/negative
pair only when the pair is adjacent (combinatorial test on zero sets).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from ..errors import EmbeddingError
from ..linalg import DEFAULT_TOL, exact_inverse, exact_rref, independent_rows, to_fractions

MAX_DD_DIM = 12


@dataclass(frozen=True, eq=False)
class ConeDescription:
    """``cone(rays)``; ``facets`` optionally lists generators of the dual cone."""

    ambient_dim: int
    rays: np.ndarray
    facets: np.ndarray | None = None

    def __post_init__(self):
        rays = np.atleast_2d(np.asarray(self.rays))
        if rays.size == 0:
            rays = rays.reshape(0, self.ambient_dim)
        if rays.shape[1] != self.ambient_dim:
            raise ValueError(f"rays have length {rays.shape[1]}, ambient dim is {self.ambient_dim}")
        object.__setattr__(self, "rays", rays)
        if self.facets is not None:
            f = np.atleast_2d(np.asarray(self.facets))
            object.__setattr__(self, "facets", f.reshape(-1, self.ambient_dim))

    def check(self, tol: float = DEFAULT_TOL) -> list[str]:
        problems = []
        for i, r in enumerate(self.rays):
            if not np.any(np.asarray(r, dtype=float)):
                problems.append(f"ray {i} is zero")
        if self.facets is not None and len(self.rays):
            pair = np.asarray(self.facets, dtype=float) @ np.asarray(self.rays, dtype=float).T
            if pair.min() < -tol:
                i, j = np.unravel_index(np.argmin(pair), pair.shape)
                problems.append(f"facet {i} is negative on ray {j} ({pair[i, j]:.3g})")
        return problems


def _normalize(v, exact):
    if exact:
        m = max(abs(x) for x in v)
        return v / m if m != 0 else v
    m = float(np.max(np.abs(v)))
    return v / m if m > 0 else v


def _nullspace_basis(mat, exact, tol):
    """Basis (rows) of {y : mat y = 0}."""
    d = mat.shape[1]
    if mat.shape[0] == 0:
        return to_fractions(np.eye(d, dtype=int)) if exact else np.eye(d)
    if exact:
        red, piv = exact_rref(mat)
        free = [c for c in range(d) if c not in piv]
        out = []
        for fcol in free:
            v = np.array([Fraction(0)] * d, dtype=object)
            v[fcol] = Fraction(1)
            for row, pc in enumerate(piv):
                v[pc] = -red[row, fcol]
            out.append(v)
        return np.array(out, dtype=object).reshape(len(out), d)
    u, s, vt = np.linalg.svd(np.asarray(mat, dtype=float))
    r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0)))
    return vt[r:]


def pointed_dual_rays(G, *, exact: bool = False, tol: float = DEFAULT_TOL):
    """Extreme rays of ``{z in R^k : G z >= 0}`` where ``G`` has full column rank ``k``."""
    n, k = G.shape
    zero = Fraction(0) if exact else 0.0
    start = exact_rref(G.T)[1] if exact else independent_rows(G, tol)
    if len(start) < k:
        raise EmbeddingError(f"constraint matrix has rank {len(start)} < {k}; dual is not pointed")
    G0 = G[start]
    inv = exact_inverse(G0) if exact else np.linalg.inv(np.asarray(G0, dtype=float))
    rays = [_normalize(inv[:, i].copy(), exact) for i in range(k)]
    # zero sets are kept as frozensets of constraint indices (original numbering)
    zeros = [frozenset(start[j] for j in range(k) if j != i) for i in range(k)]

    def is_zero(v):
        return v == 0 if exact else abs(v) <= tol

    for ci in (i for i in range(n) if i not in start):
        g = G[ci]
        vals = [g @ r for r in rays]
        pos = [i for i, v in enumerate(vals) if not is_zero(v) and v > zero]
        neg = [i for i, v in enumerate(vals) if not is_zero(v) and v < zero]
        nul = [i for i, v in enumerate(vals) if is_zero(v)]
        if not neg:
            for i in nul:
                zeros[i] = zeros[i] | {ci}
            continue
        new_rays, new_zeros = [], []
        for i in pos:
            new_rays.append(rays[i])
            new_zeros.append(zeros[i])
        for i in nul:
            new_rays.append(rays[i])
            new_zeros.append(zeros[i] | {ci})
        for i in pos:
            for j in neg:
                common = zeros[i] & zeros[j]
                if len(common) < k - 2:
                    continue
                adjacent = True
                for t in range(len(rays)):
                    if t != i and t != j and common <= zeros[t]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                r = vals[i] * rays[j] - vals[j] * rays[i]
                r = _normalize(r, exact)
                new_rays.append(r)
                new_zeros.append(common | {ci})
        rays, zeros = new_rays, new_zeros
    return rays


def dual_cone(c: ConeDescription, *, exact: bool = False, tol: float = DEFAULT_TOL) -> ConeDescription:
    """Generators of the dual cone of ``cone(c.rays)``.

    When the rays do not span the ambient space the dual contains the
    orthogonal complement; it is emitted as ``+/-`` pairs of basis vectors.
    """
    d = c.ambient_dim
    if d > MAX_DD_DIM:
        raise EmbeddingError(f"dual_cone supports ambient dimension <= {MAX_DD_DIM}, got {d}")
    X = to_fractions(c.rays) if exact else np.asarray(c.rays, dtype=float)
    nonzero = [i for i in range(X.shape[0]) if any((v != 0) if exact else abs(v) > tol for v in X[i])]
    X = X[nonzero]
    if X.shape[0] == 0:
        raise EmbeddingError("degenerate cone: no nonzero rays")
    basis_idx = exact_rref(X.T)[1] if exact else independent_rows(X, tol)
    B = X[basis_idx]                       # k x d rational/float basis of span(rays)
    k = B.shape[0]
    G = X @ B.T                            # constraints on coordinates z, y = B^T z
    zs = pointed_dual_rays(G, exact=exact, tol=tol)
    out = [_normalize(B.T @ z, exact) for z in zs]
    for v in _nullspace_basis(X, exact, tol):
        out.append(_normalize(v, exact))
        out.append(_normalize(-v, exact))
    arr = np.array(out, dtype=object if exact else float).reshape(len(out), d)
    return ConeDescription(d, arr, facets=c.rays)


def brute_force_extreme_rays(G: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Extreme rays of ``{y : G y >= 0}`` (pointed) by enumerating (k-1)-subsets.

    Exponential; used as an independent oracle for small instances.
    """
    G = np.asarray(G, dtype=float)
    n, k = G.shape
    found: list[np.ndarray] = []
    for sub in combinations(range(n), k - 1):
        ns = _nullspace_basis(G[list(sub)], False, tol)
        if ns.shape[0] != 1:
            continue
        v = ns[0]
        for cand in (v, -v):
            if np.all(G @ cand >= -tol * 10):
                cand = cand / np.max(np.abs(cand))
                if not any(np.allclose(cand, f, atol=1e-7) for f in found):
                    found.append(cand)
    return np.array(found).reshape(len(found), k)


def in_cone(rays: np.ndarray, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    from .simplex import solve_feasibility

    return solve_feasibility(np.asarray(rays, dtype=float).T, np.asarray(x, dtype=float), tol=tol).feasible


def same_cone(rays_a: np.ndarray, rays_b: np.ndarray, tol: float = 1e-8) -> bool:
    """Mutual LP membership of the generators."""
    return all(in_cone(rays_b, r, tol) for r in np.asarray(rays_a, dtype=float)) and all(
        in_cone(rays_a, r, tol) for r in np.asarray(rays_b, dtype=float)
    )
