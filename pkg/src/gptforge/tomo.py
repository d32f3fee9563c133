"""Transition matrices, identity decomposition and tomographic locality.

For spanning states ``P_j`` and effects ``E_k`` of a system the transition
matrix of the identity is ``N_1[k, j] = E_k . P_j``. A process ``T`` from
``A`` to ``B`` has ``N_T[k, j] = E^B_k . T . P^A_j``,
``M_T = N_1B^{-1} N_T N_1A^{-1}`` and the standard form
``M_T N_1A``, which composes by matrix product and Kronecker product.

In standard coordinates a state ``s`` becomes ``N_1^{-1} (E s)`` (its
expansion in the spanning states) and an effect ``e`` becomes ``e P``
(its values on the spanning states).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import GptError, SingularMatrixError, SystemMismatch
from .gptcore import (
    GptEffect, GptState, GptTransformation, SystemSpec, compose_seq, find_composite, identity,
)
from .linalg import COND_LIMIT, DEFAULT_TOL, checked_inverse, numerical_rank


@dataclass(frozen=True, eq=False)
class SpanningSet:
    """Spanning states and effects of one system with the identity's transition matrix."""

    system: SystemSpec
    states: tuple[GptState, ...]
    effects: tuple[GptEffect, ...]
    N1: np.ndarray = field(init=False)
    M1: np.ndarray = field(init=False)
    cond: float = field(init=False)

    def __post_init__(self):
        states, effects = tuple(self.states), tuple(self.effects)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "effects", effects)
        for s in states:
            if s.system != self.system:
                raise SystemMismatch(f"state on {s.system.id!r} in spanning set for {self.system.id!r}")
        for e in effects:
            if e.system != self.system:
                raise SystemMismatch(f"effect on {e.system.id!r} in spanning set for {self.system.id!r}")
        d = self.system.dim
        P = np.array([s.vec for s in states]).T.reshape(d, len(states))
        E = np.array([e.covec for e in effects]).reshape(len(effects), d)
        N1 = E @ P
        rank = numerical_rank(N1)
        if N1.shape != (d, d) or rank < d:
            raise SingularMatrixError(
                f"states/effects are not tomographically complete: rank {rank} < {d}",
                rank=rank, expected=d,
            )
        M1, cond = checked_inverse(N1, COND_LIMIT)
        object.__setattr__(self, "N1", N1)
        object.__setattr__(self, "M1", M1)
        object.__setattr__(self, "cond", cond)

    @property
    def P(self) -> np.ndarray:
        """Columns are the spanning state vectors."""
        return np.array([s.vec for s in self.states]).T

    @property
    def E(self) -> np.ndarray:
        """Rows are the spanning effect covectors."""
        return np.array([e.covec for e in self.effects])

    def same_as(self, other: "SpanningSet", tol: float = DEFAULT_TOL) -> bool:
        return (
            self.system == other.system
            and self.N1.shape == other.N1.shape
            and np.allclose(self.P, other.P, atol=tol, rtol=0)
            and np.allclose(self.E, other.E, atol=tol, rtol=0)
        )

    def standard_system(self) -> SystemSpec:
        """The system in standard coordinates: unit effect ``u P``."""
        return SystemSpec(f"{self.system.id}~std", self.system.dim, self.system.unit_effect @ self.P)

    def to_standard_state(self, s: GptState) -> GptState:
        return GptState(self.standard_system(), self.state_coords(s), s.normalized, s.label)

    def to_standard_effect(self, e: GptEffect) -> GptEffect:
        return GptEffect(self.standard_system(), self.effect_coords(e), e.label)

    def state_coords(self, s: GptState) -> np.ndarray:
        return self.M1 @ (self.E @ s.vec)

    def effect_coords(self, e: GptEffect) -> np.ndarray:
        return e.covec @ self.P


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    raw_N: np.ndarray
    M: np.ndarray
    standard: np.ndarray
    basis_in: SpanningSet
    basis_out: SpanningSet
    process: GptTransformation | None = None

    @property
    def cond(self) -> float:
        """Largest condition number of the two identity transition matrices."""
        return max(self.basis_in.cond, self.basis_out.cond)


def _as_spanning(system, states, effects) -> SpanningSet:
    if isinstance(states, SpanningSet):
        return states
    return SpanningSet(system, tuple(states), tuple(effects))


def transition_matrix(
    t: GptTransformation,
    states: Sequence[GptState] | SpanningSet,
    effects: Sequence[GptEffect] | None = None,
    out_states: Sequence[GptState] | SpanningSet | None = None,
    out_effects: Sequence[GptEffect] | None = None,
) -> TransitionMatrix:
    """Transition matrices of ``t`` for the given spanning sets.

    ``states``/``effects`` span the input system; the output spanning set
    defaults to the input one (for endomorphisms).
    """
    bin_ = _as_spanning(t.in_system, states, effects)
    if out_states is None:
        if t.out_system != t.in_system:
            raise SystemMismatch("out_states/out_effects are required when input and output systems differ")
        bout = bin_
    else:
        bout = _as_spanning(t.out_system, out_states, out_effects)
    raw = bout.E @ t.mat @ bin_.P
    return from_raw(raw, bin_, bout, t)


def from_raw(raw_N: np.ndarray, basis_in: SpanningSet, basis_out: SpanningSet, process=None) -> TransitionMatrix:
    raw_N = np.asarray(raw_N, dtype=float)
    M = basis_out.M1 @ raw_N @ basis_in.M1
    return TransitionMatrix(raw_N, M, M @ basis_in.N1, basis_in, basis_out, process)


@dataclass(frozen=True)
class IdentityDecomposition:
    ok: bool
    residual: float
    cond: float
    reconstruction: np.ndarray


def identity_decomposition_check(
    system: SystemSpec,
    states: Sequence[GptState],
    effects: Sequence[GptEffect],
    tol: float = DEFAULT_TOL,
) -> IdentityDecomposition:
    """Rebuild the identity as ``sum_{j,k} [N_1^{-1}]_{j,k} |P_j><E_k|``.

    Raises :class:`SingularMatrixError` naming the deficient rank when the
    sets are not tomographically complete.
    """
    basis = SpanningSet(system, tuple(states), tuple(effects))
    recon = np.zeros((system.dim, system.dim))
    for j, P in enumerate(basis.states):
        for k, E in enumerate(basis.effects):
            recon += basis.M1[j, k] * np.outer(P.vec, E.covec)
    residual = float(np.max(np.abs(recon - np.eye(system.dim))))
    return IdentityDecomposition(residual <= tol, residual, basis.cond, recon)


@dataclass(frozen=True)
class LocalityVerdict:
    tomographically_local: bool
    dim_a: int
    dim_b: int
    dim_joint: int
    local_parameters: int
    deficit: int

    def __str__(self) -> str:
        tag = "TL" if self.tomographically_local else "not TL"
        return f"{tag}: joint {self.dim_joint} vs local {self.dim_a}x{self.dim_b}={self.local_parameters} (deficit {self.deficit})"


def tomographic_locality_check(dim_a: int, dim_b: int, dim_joint: int) -> LocalityVerdict:
    """Dimension count: tomographically local iff ``dim_joint == dim_a * dim_b`` (exact integers)."""
    for v in (dim_a, dim_b, dim_joint):
        if int(v) != v or v < 1:
            raise ValueError(f"dimensions must be positive integers, got {v!r}")
    dim_a, dim_b, dim_joint = int(dim_a), int(dim_b), int(dim_joint)
    local = dim_a * dim_b
    return LocalityVerdict(dim_joint == local, dim_a, dim_b, dim_joint, local, dim_joint - local)


def joint_dimension(vectors: Iterable[np.ndarray], tol: float = DEFAULT_TOL) -> int:
    """Rank of a set of vectors (e.g. all bipartite states of a fragment)."""
    arr = np.array(list(vectors), dtype=float)
    return numerical_rank(arr, tol) if arr.size else 0


def compose_raw(tm2: TransitionMatrix, tm1: TransitionMatrix, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``M_{T2.T1} = M_{T2} N_1B M_{T1}``, cross-checked against the standard route.

    The standard route multiplies the standard forms and conjugates back by
    ``N_1A^{-1}``; when both transition matrices carry their process the
    direct transition matrix of the composite is compared as well.
    """
    if not tm1.basis_out.same_as(tm2.basis_in):
        raise SystemMismatch("basis mismatch: output spanning set of the first process differs from the input of the second")
    raw_route = tm2.M @ tm1.basis_out.N1 @ tm1.M
    std_route = (tm2.standard @ tm1.standard) @ tm1.basis_in.M1
    dev = float(np.max(np.abs(raw_route - std_route)))
    if tm1.process is not None and tm2.process is not None:
        direct = transition_matrix(compose_seq(tm2.process, tm1.process), tm1.basis_in, None, tm2.basis_out, None)
        dev = max(dev, float(np.max(np.abs(raw_route - direct.M))))
    scale = max(1.0, float(np.max(np.abs(raw_route))))
    if dev > tol * scale:
        raise GptError(f"raw and standard composition routes disagree by {dev:.3g}")
    return raw_route


def product_spanning_set(a: SpanningSet, b: SpanningSet, systems: Iterable[SystemSpec]) -> SpanningSet:
    """Spanning set of the composite built from products (row-major order)."""
    c = find_composite(a.system, b.system, systems)
    states = [GptState(c, np.kron(s.vec, t.vec)) for s in a.states for t in b.states]
    effects = [GptEffect(c, np.kron(e.covec, f.covec)) for e in a.effects for f in b.effects]
    return SpanningSet(c, tuple(states), tuple(effects))


def standard_form(t: GptTransformation, basis_in: SpanningSet, basis_out: SpanningSet | None = None) -> GptTransformation:
    """Standard-form transformation on ``R^m`` coordinates."""
    tm = transition_matrix(t, basis_in, None, basis_out, None) if basis_out is not None else transition_matrix(t, basis_in)
    return GptTransformation(
        tm.basis_in.standard_system(), tm.basis_out.standard_system(), tm.standard, t.channel, t.label
    )


def identity_standard(basis: SpanningSet) -> np.ndarray:
    return transition_matrix(identity(basis.system), basis).standard
