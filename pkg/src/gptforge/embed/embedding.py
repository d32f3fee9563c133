"""Simplex-embedding (noncontextuality) test for polyhedral GPT fragments.

The fragment is first reduced to its accessible dimension ``r``: pick ``r``
independent effects ``E_sel`` and ``r`` independent states ``S_sel`` from the
probability table, map states by ``x = E_sel s`` and effects by
``e -> e S_sel N^{-1}`` with ``N = E_sel S_sel``. Probabilities are preserved
and both reduced sets span ``R^r``.

The fragment embeds in an ``r``-simplex iff the identity on ``R^r`` is a
nonnegative combination ``sum_ab c_ab f_a d_b^T`` where ``f_a`` generate the
vectors that every effect evaluates nonnegatively and ``d_b`` generate the
functionals that are nonnegative on every state. Infeasibility is witnessed
by ``Y`` with ``f_a^T Y d_b <= 0`` for all pairs and ``tr(Y) > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from math import comb

import numpy as np

from ..errors import DimensionMismatch, EmbeddingError
from ..gptcore import GptFragment, SystemSpec
from ..linalg import (
    DEFAULT_TOL, exact_independent_rows, exact_inverse, independent_rows, numerical_rank, to_fractions,
)
from .cones import ConeDescription, brute_force_extreme_rays, dual_cone, in_cone
from .simplex import EXACT_MAX_VARIABLES, solve_feasibility

EXACT_MAX_DENOMINATOR = 10**6


# ---------------------------------------------------------------------------
# reduction to the accessible space
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReducedFragment:
    system_id: str
    ambient_dim: int
    state_map: np.ndarray        # r x d
    effect_map: np.ndarray       # d x r
    states: np.ndarray           # rows, reduced coordinates
    effects: np.ndarray          # rows, reduced coordinates (unit effect included)
    unit: np.ndarray

    @property
    def dim(self) -> int:
        return self.state_map.shape[0]


def _fragment_data(fragment: GptFragment, system: str | None):
    if system is None:
        if len(fragment.systems) != 1:
            candidates = {s.system.id for s in fragment.states}
            if len(candidates) != 1:
                raise EmbeddingError("fragment has several systems; pass system=")
            system = candidates.pop()
        else:
            system = fragment.systems[0].id
    sys_spec: SystemSpec = fragment.system(system)
    if system in fragment.state_cone_rays:
        S = np.asarray(fragment.state_cone_rays[system], dtype=float)
    else:
        S = np.array([s.vec for s in fragment.states_on(system)])
    if system in fragment.effect_cone_rays:
        E = np.asarray(fragment.effect_cone_rays[system], dtype=float)
    else:
        E = np.array([e.covec for e in fragment.effects_on(system)])
    if S.size == 0 or E.size == 0:
        raise EmbeddingError(f"missing cone data: system {system!r} needs states and effects")
    u = np.asarray(sys_spec.unit_effect, dtype=float)
    E = np.vstack([E, u[None, :]])
    return sys_spec, S.reshape(-1, sys_spec.dim), E.reshape(-1, sys_spec.dim), u


def reduce_fragment(fragment: GptFragment, system: str | None = None, *, exact: bool = False,
                    tol: float = DEFAULT_TOL) -> ReducedFragment:
    spec, S, E, u = _fragment_data(fragment, system)
    if exact:
        # float inputs carry rounding noise that would inflate the exact rank
        Sx, Ex, ux = (to_fractions(a, EXACT_MAX_DENOMINATOR) for a in (S, E, u))
        table = Ex @ Sx.T
        rows = exact_independent_rows(table)
        cols = exact_independent_rows(table[rows].T)
        N = Ex[rows] @ Sx[cols].T
        Ninv = exact_inverse(N)
        state_map = Ex[rows]
        effect_map = Sx[cols].T @ Ninv
        states = Sx @ state_map.T
        effects = Ex @ effect_map
        unit = ux @ effect_map
    else:
        table = E @ S.T
        rows = independent_rows(table, tol)
        cols = independent_rows(table[rows].T, tol)
        if len(cols) != len(rows):
            raise EmbeddingError("could not select a square invertible sub-table")
        N = E[rows] @ S[cols].T
        Ninv = np.linalg.inv(N)
        state_map = E[rows]
        effect_map = S[cols].T @ Ninv
        states = S @ state_map.T
        effects = E @ effect_map
        unit = u @ effect_map
    return ReducedFragment(spec.id, spec.dim, state_map, effect_map, states, effects, unit)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmbeddingCertificate:
    """Nonnegative weights ``c_ab`` with ``sum c_ab f_a d_b^T = I_r``.

    Each active pair ``(a, b)`` is one ontic state: its response function is
    ``e -> e . f_a`` and its weight in state ``x`` is ``c_ab d_b . x``.
    """

    system_id: str
    weights: np.ndarray          # |F| x |D|
    f_rays: np.ndarray           # |F| x r
    d_rays: np.ndarray           # |D| x r
    state_map: np.ndarray        # r x d
    effect_map: np.ndarray       # d x r
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.state_map.shape[0]

    @property
    def reconstructed(self) -> np.ndarray:
        return np.einsum("ab,ai,bj->ij", self.weights, self.f_rays, self.d_rays)

    @property
    def ontic_count(self) -> int:
        return int(np.sum(self.weights > self.tol))

    def active_terms(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(self.weights[a, b])) for a, b in zip(*np.nonzero(self.weights > self.tol))]

    def ontic_model(self) -> tuple[np.ndarray, np.ndarray]:
        """``(mu, xi)``: ``mu[k] @ x`` gives the weight of ontic state ``k`` in reduced state ``x``;
        ``xi[k]`` is the reduced-coordinate vector an effect is evaluated on."""
        terms = self.active_terms()
        mu = np.array([c * self.d_rays[b] for a, b, c in terms])
        xi = np.array([self.f_rays[a] for a, b, c in terms])
        return mu, xi


@dataclass(frozen=True, eq=False)
class FarkasCertificate:
    """Functional ``Y`` with ``f_a^T Y d_b <= tol`` for all pairs and ``tr(Y) >= gap > 0``."""

    system_id: str
    functional: np.ndarray       # r x r
    f_rays: np.ndarray
    d_rays: np.ndarray
    state_map: np.ndarray
    effect_map: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.state_map.shape[0]

    @property
    def gap(self) -> float:
        return float(np.trace(self.functional))

    @property
    def max_pairing(self) -> float:
        return float(np.max(self.f_rays @ self.functional @ self.d_rays.T))


@dataclass(frozen=True, eq=False)
class EmbedResult:
    feasible: bool
    certificate: EmbeddingCertificate | FarkasCertificate
    reduced: ReducedFragment
    n_effect_dual: int
    n_state_dual: int
    pivots: int
    exact: bool = False

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible"


def _normalize_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(np.abs(a), axis=1, keepdims=True)
    m[m == 0] = 1.0
    return a / m


def _scale_by_unit(f: np.ndarray, unit: np.ndarray, tol: float) -> np.ndarray:
    out = f.copy()
    for i, v in enumerate(out):
        uv = unit @ v
        if uv > tol:
            out[i] = v / uv
    return out


def embed_test(
    fragment: GptFragment,
    tol: float = DEFAULT_TOL,
    *,
    exact: bool = False,
    system: str | None = None,
    ontic_dim: int | None = None,
) -> EmbedResult:
    """Decide simplex-embeddability of ``fragment`` with a self-verified certificate.

    ``ontic_dim`` may request the size of the target simplex; anything below
    the accessible dimension is rejected up front since no embedding into a
    lower-dimensional simplex can exist.
    """
    red = reduce_fragment(fragment, system, exact=exact, tol=tol)
    r = red.dim
    if ontic_dim is not None and ontic_dim < r:
        raise ValueError(f"cannot embed a fragment of dimension {r} into a simplex with {ontic_dim} vertices")

    f_cone = dual_cone(ConeDescription(r, red.effects), exact=exact, tol=tol)
    d_cone = dual_cone(ConeDescription(r, red.states), exact=exact, tol=tol)
    F_exact, D_exact = f_cone.rays, d_cone.rays
    if exact:
        F_exact = np.array([v / (red.unit @ v) if red.unit @ v > 0 else v for v in F_exact], dtype=object)
        if len(F_exact) * len(D_exact) > EXACT_MAX_VARIABLES:
            raise EmbeddingError(
                f"exact mode supports at most {EXACT_MAX_VARIABLES} LP variables, need {len(F_exact) * len(D_exact)}"
            )
        A = np.array([np.outer(f, d).ravel() for f in F_exact for d in D_exact], dtype=object).T
        b = to_fractions(np.eye(r, dtype=int)).ravel()
    else:
        F_exact = _scale_by_unit(np.asarray(F_exact, dtype=float), red.unit, tol)
        D_exact = _normalize_rows(np.asarray(D_exact, dtype=float))
        A = np.einsum("ai,bj->ijab", F_exact, D_exact).reshape(r * r, -1)
        b = np.eye(r).ravel()
    res = solve_feasibility(A, b, exact=exact, tol=tol)

    F = np.asarray(F_exact, dtype=float)
    D = np.asarray(D_exact, dtype=float)
    smap = np.asarray(red.state_map, dtype=float)
    emap = np.asarray(red.effect_map, dtype=float)
    if res.feasible:
        w = np.asarray(res.x, dtype=float).reshape(len(F), len(D))
        cert: EmbeddingCertificate | FarkasCertificate = EmbeddingCertificate(red.system_id, w, F, D, smap, emap, tol)
    else:
        Y = np.asarray(res.y, dtype=float).reshape(r, r)
        Y = Y / np.max(np.abs(Y))
        cert = FarkasCertificate(red.system_id, Y, F, D, smap, emap, tol)
    if not verify_certificate(cert, fragment, tol):
        problems = certificate_problems(cert, fragment, tol)
        raise EmbeddingError(f"solver certificate failed independent verification ({problems[0]}); retry with exact=True")
    return EmbedResult(res.feasible, cert, red, len(F), len(D), res.pivots, exact)


# ---------------------------------------------------------------------------
# independent verification
# ---------------------------------------------------------------------------

def certificate_problems(cert, fragment: GptFragment, tol: float = DEFAULT_TOL,
                         check_generators: bool = True, brute_force_limit: int = 20000) -> list[str]:
    """Every failed certificate invariant, recomputed from the fragment with plain arithmetic."""
    spec, S, E, u = _fragment_data(fragment, cert.system_id)
    r = cert.dim
    F, D = np.asarray(cert.f_rays, dtype=float), np.asarray(cert.d_rays, dtype=float)
    smap, emap = np.asarray(cert.state_map, dtype=float), np.asarray(cert.effect_map, dtype=float)
    if smap.shape != (r, spec.dim) or emap.shape != (spec.dim, r):
        raise DimensionMismatch(f"certificate maps {smap.shape}/{emap.shape} do not fit system of dim {spec.dim}")
    if F.ndim != 2 or D.ndim != 2 or F.shape[1] != r or D.shape[1] != r:
        raise DimensionMismatch("certificate rays do not match the certificate dimension")
    probs: list[str] = []
    X = S @ smap.T
    Et = E @ emap
    ut = u @ emap
    scale = max(1.0, float(np.max(np.abs(E @ S.T))))
    dev = float(np.max(np.abs(Et @ X.T - E @ S.T)))
    if dev > max(tol, 1e-9) * 100 * scale:
        probs.append(f"reduction does not preserve probabilities (deviation {dev:.3g})")
    if numerical_rank(X) != r or numerical_rank(Et) != r:
        probs.append("reduced states/effects do not span the certificate space")
    if isinstance(cert, EmbeddingCertificate):
        w = np.asarray(cert.weights, dtype=float)
        if w.shape != (len(F), len(D)):
            raise DimensionMismatch(f"weights {w.shape} do not match {len(F)} x {len(D)} rays")
        if w.size and w.min() < -tol:
            probs.append(f"negative weight {w.min():.3g}")
        recon = np.einsum("ab,ai,bj->ij", w, F, D)
        rdev = float(np.max(np.abs(recon - np.eye(r))))
        # backward error: the residual is judged against the magnitude of the summed terms
        mass = float(np.einsum("ab,a,b->", np.abs(w), np.abs(F).max(axis=1, initial=0.0),
                               np.abs(D).max(axis=1, initial=0.0)))
        if rdev > max(tol, 1e-9) * 100 * max(1.0, mass):
            probs.append(f"weights do not reconstruct the identity (residual {rdev:.3g})")
        active_f = sorted({a for a, b in zip(*np.nonzero(w > tol))})
        active_d = sorted({b for a, b in zip(*np.nonzero(w > tol))})
        if active_f:
            worst = float((Et @ F[active_f].T).min())
            if worst < -max(tol, 1e-9) * 100:
                probs.append(f"a response vector is evaluated negatively by an effect ({worst:.3g})")
        if active_d:
            worst = float((X @ D[active_d].T).min())
            if worst < -max(tol, 1e-9) * 100:
                probs.append(f"an ontic weight functional is negative on a state ({worst:.3g})")
        return probs

    Y = np.asarray(cert.functional, dtype=float)
    if Y.shape != (r, r):
        raise DimensionMismatch(f"functional {Y.shape} does not match dimension {r}")
    gap = float(np.trace(Y))
    if not gap > max(tol, 1e-9) * 10:
        probs.append(f"gap {gap:.3g} is not positive")
    pair = F @ Y @ D.T
    if pair.size and pair.max() > max(tol, 1e-9) * 100:
        probs.append(f"functional is positive ({pair.max():.3g}) on a product term")
    if (Et @ F.T).min() < -max(tol, 1e-9) * 100:
        probs.append("an f ray is evaluated negatively by an effect")
    if (X @ D.T).min() < -max(tol, 1e-9) * 100:
        probs.append("a d ray is negative on a state")
    if check_generators:
        # the separation only proves infeasibility if F and D generate the full dual cones
        for name, G, rays in (("effect", Et, F), ("state", X, D)):
            if comb(len(G), r - 1) > brute_force_limit:
                continue
            for ext in brute_force_extreme_rays(G, tol=1e-9):
                if not in_cone(rays, ext, tol=1e-7):
                    probs.append(f"{name}-dual generator list is incomplete")
                    break
    return probs


def verify_certificate(cert, fragment: GptFragment, tol: float = DEFAULT_TOL) -> bool:
    """Recheck an embedding or Farkas certificate independently of the solver."""
    return not certificate_problems(cert, fragment, tol)


# ---------------------------------------------------------------------------
# reduction of the number of ontic states
# ---------------------------------------------------------------------------

def _resolve(F, D, support, r, tol):
    cols = [(a, b) for a, b in support]
    A = np.array([np.outer(F[a], D[b]).ravel() for a, b in cols]).T.reshape(r * r, len(cols))
    res = solve_feasibility(A, np.eye(r).ravel(), tol=tol)
    if not res.feasible:
        return None
    w = np.zeros((len(F), len(D)))
    for (a, b), v in zip(cols, res.x):
        w[a, b] = v
    return w


def _square_candidates(cert: EmbeddingCertificate, tol: float, max_subsets: int):
    """Embeddings with exactly ``r`` terms whose f and d rays are both generators."""
    F, D, r = cert.f_rays, cert.d_rays, cert.dim
    active = sorted({a for a, _, _ in cert.active_terms()})
    order = active + [a for a in range(len(F)) if a not in active]
    Dn = D / np.linalg.norm(D, axis=1, keepdims=True)
    for k, sub in enumerate(combinations(order, r)):
        if k >= max_subsets:
            return None
        Fm = F[list(sub)].T
        if numerical_rank(Fm) < r:
            continue
        Dm = np.linalg.inv(Fm)          # rows D_l with sum_l f_l D_l^T = I
        w = np.zeros((len(F), len(D)))
        ok = True
        for lam, a in enumerate(sub):
            row = Dm[lam]
            nrm = np.linalg.norm(row)
            cos = Dn @ (row / nrm)
            b = int(np.argmax(cos))
            if cos[b] < 1 - 1e-9:
                ok = False
                break
            w[a, b] = nrm / np.linalg.norm(D[b])
        if ok:
            return w
    return None


def reduce_certificate(cert: EmbeddingCertificate, target_count: int | None = None,
                       tol: float = DEFAULT_TOL, max_subsets: int = 50000) -> EmbeddingCertificate:
    """Best-effort reduction of the number of active terms toward ``target_count`` (default ``r``).

    First drops terms one at a time while the restricted LP stays feasible,
    then searches ``r``-subsets of response rays for an exact square
    embedding. The residual never grows beyond ``tol``.
    """
    r = cert.dim
    target = r if target_count is None else target_count
    best = cert
    if best.ontic_count <= target:
        return best
    F, D = cert.f_rays, cert.d_rays

    improved = True
    while improved and best.ontic_count > target:
        improved = False
        terms = sorted(best.active_terms(), key=lambda t: t[2])
        for a, b, _ in terms:
            support = [(x, y) for x, y, _ in best.active_terms() if (x, y) != (a, b)]
            w = _resolve(F, D, support, r, tol)
            if w is not None:
                cand = replace(best, weights=w)
                if np.max(np.abs(cand.reconstructed - np.eye(r))) <= tol * 10 and cand.ontic_count < best.ontic_count:
                    best = cand
                    improved = True
                    break

    if best.ontic_count > target:
        w = _square_candidates(best, tol, max_subsets)
        if w is not None:
            cand = replace(best, weights=w)
            if np.max(np.abs(cand.reconstructed - np.eye(r))) <= tol * 10 and cand.ontic_count < best.ontic_count:
                best = cand
    return best


# ---------------------------------------------------------------------------
# dimension bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CardinalityVerdict:
    passed: bool
    n_ontic: int
    gpt_dim: int
    gamma: float

    def __str__(self) -> str:
        return f"{'pass' if self.passed else 'fail'}: {self.n_ontic} ontic states for dimension {self.gpt_dim} (gamma={self.gamma:g})"


def cardinality_check(n_ontic: int, gpt_dim: int) -> CardinalityVerdict:
    """A diagram-preserving noncontextual model must have exactly ``gpt_dim`` ontic states."""
    if n_ontic < 1 or gpt_dim < 1:
        raise ValueError("counts must be positive")
    return CardinalityVerdict(n_ontic == gpt_dim, int(n_ontic), int(gpt_dim), n_ontic / gpt_dim)
