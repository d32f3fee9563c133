"""Hilbert-space front end: density operators, effects and channels as GPT data.

Complex arithmetic is confined to this module; everything returned is real.

Coordinates come from an orthonormal Hermitian basis ``B_k`` (normalized
identity first, then generalized Gell-Mann matrices). A ``scale`` factor
``c`` is applied as ``v_k = c tr(B_k rho)`` for states and
``e_k = tr(B_k E) / c`` for effects, so ``e . v = tr(E rho)`` for any ``c``.
With ``c = sqrt(d)`` the unit effect is ``(1, 0, ..., 0)``; for a qubit
this gives the familiar Pauli coordinates ``(1, x, y, z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .errors import FrameError, GptError
from .frames import FrameEntry, FrameModel, build_frame, represent
from .gptcore import GptEffect, GptFragment, GptState, GptTransformation, SystemSpec
from .linalg import DEFAULT_TOL

HERMITIAN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    hilbert_dim: int
    elements: np.ndarray     # (d^2, d, d), orthonormal under tr(A B)
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.hilbert_dim ** 2

    def gram_residual(self) -> float:
        g = np.einsum("kij,lji->kl", self.elements, self.elements)
        return float(np.max(np.abs(g - np.eye(self.dim))))

    def system(self, id: str | None = None) -> SystemSpec:
        u = effect_coords(np.eye(self.hilbert_dim), self)
        # tr(B_k) is 0 or sqrt(d) analytically; drop the rounding noise
        u = np.where(np.abs(u) < 1e-14, 0.0, u)
        if self.scale != 1.0:
            u[0] = np.round(u[0], 14)
        return SystemSpec(id or f"Q{self.hilbert_dim}", self.dim, u)


def gell_mann_basis(d: int) -> np.ndarray:
    """Normalized identity followed by the generalized Gell-Mann matrices.

    Order: for each pair ``j < k`` (row-major) the symmetric then the
    antisymmetric element, then the diagonal elements. For ``d = 2`` this is
    ``(I, X, Y, Z) / sqrt(2)``.
    """
    if d < 1:
        raise ValueError("Hilbert dimension must be positive")
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            out += [s / np.sqrt(2), a / np.sqrt(2)]
    for ell in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(ell), np.arange(ell)] = 1.0
        m[ell, ell] = -ell
        out.append(m / np.sqrt(np.real(np.trace(m @ m))))
    return np.array(out)


def hermitian_basis(d: int, unit_first: bool = False) -> HermitianBasis:
    """Orthonormal basis; ``unit_first`` rescales so that ``u = (1, 0, ..., 0)``."""
    return HermitianBasis(d, gell_mann_basis(d), float(np.sqrt(d)) if unit_first else 1.0)


def pauli_basis() -> HermitianBasis:
    """Qubit basis giving states ``(1, x, y, z)`` and effects ``tr(sigma_k E) / 2``."""
    return hermitian_basis(2, unit_first=True)


def _check_hermitian(m: np.ndarray, what: str, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GptError(f"{what} must be a square matrix")
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol:
        raise GptError(f"{what} is not Hermitian (deviation {dev:.3g})")
    return m


def state_coords(rho: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    rho = _check_hermitian(rho, "density operator")
    return basis.scale * np.real(np.einsum("kij,ji->k", basis.elements, rho))


def effect_coords(E: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    E = _check_hermitian(E, "effect")
    return np.real(np.einsum("kij,ji->k", basis.elements, E)) / basis.scale


def state_operator(vec: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Inverse of :func:`state_coords`."""
    return np.einsum("k,kij->ij", np.asarray(vec, dtype=float) / basis.scale, basis.elements)


def effect_operator(covec: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Inverse of :func:`effect_coords` (the Riesz representative of a covector)."""
    return np.einsum("k,kij->ij", np.asarray(covec, dtype=float) * basis.scale, basis.elements)


def apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(K @ rho @ K.conj().T for K in kraus)


def channel_matrix(kraus: Sequence[np.ndarray], basis_in: HermitianBasis, basis_out: HermitianBasis | None = None) -> np.ndarray:
    """Transfer matrix ``M_kl = tr(B_k E(B_l))`` (scale-adjusted when in/out scales differ)."""
    basis_out = basis_out or basis_in
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    cols = []
    for Bl in basis_in.elements:
        img = apply_kraus(kraus, Bl)
        cols.append(np.real(np.einsum("kij,ji->k", basis_out.elements, img)))
    return np.array(cols).T * (basis_out.scale / basis_in.scale)


def kraus_completeness(kraus: Sequence[np.ndarray]) -> float:
    k = [np.asarray(K, dtype=complex) for K in kraus]
    d = k[0].shape[1]
    return float(np.max(np.abs(sum(K.conj().T @ K for K in k) - np.eye(d))))


def to_gpt(obj, basis: HermitianBasis, kind: str, system: SystemSpec | None = None, out_basis: HermitianBasis | None = None,
           channel: bool = True, label: str = "", tol: float = DEFAULT_TOL):
    """Convert a density operator (``kind="state"``), effect (``"effect"``) or
    list of Kraus operators (``"channel"``) to its GPT counterpart."""
    system = system or basis.system()
    if kind == "state":
        v = state_coords(obj, basis)
        normalized = abs(float(np.real(np.trace(obj))) - 1.0) <= tol
        return GptState(system, v, normalized, label)
    if kind == "effect":
        return GptEffect(system, effect_coords(obj, basis), label)
    if kind == "channel":
        out_basis = out_basis or basis
        out_system = system if out_basis is basis else out_basis.system()
        if channel:
            dev = kraus_completeness(obj)
            if dev > tol:
                raise GptError(f"Kraus operators are not trace preserving (deviation {dev:.3g})")
        return GptTransformation(system, out_system, channel_matrix(obj, basis, out_basis), channel, label)
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# random quantum objects
# ---------------------------------------------------------------------------

def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_effect(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = g @ g.conj().T
    return h / np.max(np.linalg.eigvalsh(h)) * rng.uniform(0.2, 1.0)


def random_kraus(d: int, rng: np.random.Generator, n_ops: int = 2) -> list[np.ndarray]:
    g = rng.normal(size=(n_ops * d, d)) + 1j * rng.normal(size=(n_ops * d, d))
    q, _ = np.linalg.qr(g)
    return [q[i * d:(i + 1) * d] for i in range(n_ops)]


def depolarizing_kraus(d: int, p: float) -> list[np.ndarray]:
    """Kraus operators of ``rho -> (1-p) rho + p I/d`` built from the Weyl operators."""
    X, Z = shift_clock(d)
    ops = []
    for a, b in product(range(d), repeat=2):
        w = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
        coef = (1 - p + p / d**2) if (a, b) == (0, 0) else p / d**2
        ops.append(np.sqrt(coef) * w)
    return ops


# ---------------------------------------------------------------------------
# Weyl operators, stabilizer states, Clifford gates
# ---------------------------------------------------------------------------

def shift_clock(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Generalized Pauli ``X|x> = |x+1>`` and ``Z|x> = w^x |x>``."""
    w = np.exp(2j * np.pi / d)
    X = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    Z = np.diag(w ** np.arange(d))
    return X, Z


def fourier_gate(d: int) -> np.ndarray:
    w = np.exp(2j * np.pi / d)
    x = np.arange(d)
    return w ** np.outer(x, x) / np.sqrt(d)


def phase_gate(d: int) -> np.ndarray:
    """``S|x> = w^{x(x-1)/2}|x>`` for odd ``d``; ``diag(1, i)`` for ``d = 2``."""
    if d == 2:
        return np.diag([1, 1j])
    w = np.exp(2j * np.pi / d)
    x = np.arange(d)
    return np.diag(w ** ((x * (x - 1) // 2) % d))


def _dedupe_projectors(vecs: list[np.ndarray], tol: float = 1e-8) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vecs:
        v = v / np.linalg.norm(v)
        if not any(abs(abs(np.vdot(o, v)) - 1.0) < tol for o in out):
            out.append(v)
    return out


@lru_cache(maxsize=None)
def _stabilizer_kets(d: int) -> tuple[np.ndarray, ...]:
    X, Z = shift_clock(d)
    if d == 2:
        ops = [X, 1j * X @ Z, Z]     # X, Y, Z eigenbases
    elif d == 3:
        ops = [Z, X, X @ Z, X @ Z @ Z]
    else:
        raise GptError(f"stabilizer enumeration supports hilbert_dim 2 or 3, got {d}")
    kets: list[np.ndarray] = []
    for op in ops:
        _, vecs = np.linalg.eig(op)
        for i in range(d):
            v = vecs[:, i]
            # fix the global phase: first nonzero amplitude real positive
            k = int(np.argmax(np.abs(v) > 1e-9))
            kets.append(v * np.exp(-1j * np.angle(v[k])) / np.linalg.norm(v))
    kets = _dedupe_projectors(kets)
    return tuple(kets)


def stabilizer_states(d: int) -> list[np.ndarray]:
    """Density operators of all single-system stabilizer pure states."""
    return [np.outer(k, k.conj()) for k in _stabilizer_kets(d)]


def clifford_generators(d: int) -> dict[str, np.ndarray]:
    """Documented generating set used for stabilizer fragments.

    Qubit: H, S and the Paulis X, Y, Z. Qutrit: Fourier F, phase S, shift X,
    clock Z.
    """
    X, Z = shift_clock(d)
    if d == 2:
        return {"H": fourier_gate(2), "S": phase_gate(2), "X": X, "Y": 1j * X @ Z, "Z": Z}
    if d == 3:
        return {"F": fourier_gate(3), "S": phase_gate(3), "X": X, "Z": Z}
    raise GptError(f"unsupported hilbert_dim {d}")


def stabilizer_fragment(hilbert_dim: int, basis: HermitianBasis | None = None, transformations: bool = True) -> GptFragment:
    """Stabilizer states, their rank-1 effects and the Clifford generators.

    Cone rays are the state vectors and the effect covectors themselves.
    """
    if hilbert_dim not in (2, 3):
        raise GptError(f"stabilizer_fragment supports hilbert_dim 2 or 3, got {hilbert_dim}")
    basis = basis or hermitian_basis(hilbert_dim, unit_first=True)
    sysname = {2: "qubit", 3: "qutrit"}[hilbert_dim]
    system = basis.system(sysname)
    rhos = stabilizer_states(hilbert_dim)
    states = [to_gpt(r, basis, "state", system, label=f"s{i}") for i, r in enumerate(rhos)]
    effects = [to_gpt(r, basis, "effect", system, label=f"e{i}") for i, r in enumerate(rhos)]
    trans = []
    if transformations:
        for name, U in clifford_generators(hilbert_dim).items():
            trans.append(to_gpt([U], basis, "channel", system, label=name))
    return GptFragment(
        (system,), states, effects, trans,
        state_cone_rays={system.id: np.array([s.vec for s in states])},
        effect_cone_rays={system.id: np.array([e.covec for e in effects])},
        name=f"{sysname}-stabilizer",
    )


# ---------------------------------------------------------------------------
# Gross's discrete Wigner function
# ---------------------------------------------------------------------------

def _is_odd_prime(n: int) -> bool:
    return n > 2 and all(n % k for k in range(2, int(n**0.5) + 1))


def displacement(d: int, q: int, p: int) -> np.ndarray:
    """``D_(q,p) = w^{-2^{-1} q p} Z^p X^q`` (clock applied after shift).

    With ``ZX = w XZ`` this ordering makes ``D_(q,p)^dagger = D_(-q,-p)``,
    so the phase-point operators built from it are Hermitian.
    """
    X, Z = shift_clock(d)
    w = np.exp(2j * np.pi / d)
    half = pow(2, -1, d)
    return w ** (-(half * q * p) % d) * np.linalg.matrix_power(Z, p) @ np.linalg.matrix_power(X, q)


@dataclass(frozen=True, eq=False)
class WignerFrame:
    dim: int
    points: tuple[tuple[int, int], ...]
    phase_point_ops: np.ndarray        # (d^2, d, d), indexed like ``points``

    def invariant_residuals(self) -> dict[str, float]:
        A = self.phase_point_ops
        d = self.dim
        tr = np.einsum("kii->k", A)
        gram = np.einsum("kij,lji->kl", A, A)
        return {
            "trace": float(np.max(np.abs(tr - 1.0))),
            "orthogonality": float(np.max(np.abs(gram - d * np.eye(d * d)))),
            "completeness": float(np.max(np.abs(A.sum(axis=0) - d * np.eye(d)))),
            "hermiticity": float(np.max(np.abs(A - np.conj(np.transpose(A, (0, 2, 1)))))),
        }

    def wigner(self, rho: np.ndarray) -> np.ndarray:
        """``W(q,p) = tr(A_(q,p) rho) / d`` as a ``d x d`` array indexed ``[q, p]``."""
        vals = np.real(np.einsum("kij,ji->k", self.phase_point_ops, rho)) / self.dim
        return vals.reshape(self.dim, self.dim)


def phase_point_operators(d: int) -> WignerFrame:
    if not _is_odd_prime(d):
        raise FrameError(f"Gross's Wigner function needs an odd prime dimension, got {d}")
    if d > 7:
        raise FrameError(f"gross_wigner_frame is limited to d <= 7, got {d}")
    points = tuple(product(range(d), repeat=2))
    A0 = sum(displacement(d, q, p) for q, p in points) / d
    ops = []
    for q, p in points:
        D = displacement(d, q, p)
        ops.append(D @ A0 @ D.conj().T)
    return WignerFrame(d, points, np.array(ops))


def gross_wigner_frame(hilbert_dim: int, basis: HermitianBasis | None = None, tol: float = 1e-9) -> tuple[WignerFrame, FrameEntry]:
    """Gross's phase-point operators and the corresponding frame entry.

    Dual frame ``D*_l = A_l / d`` (rows of ``chi``), frame ``F_l = A_l``.
    """
    wf = phase_point_operators(hilbert_dim)
    res = wf.invariant_residuals()
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise FrameError(f"phase-point operator invariants violated: {bad}")
    basis = basis or hermitian_basis(hilbert_dim, unit_first=True)
    system = basis.system({3: "qutrit"}.get(hilbert_dim, f"Q{hilbert_dim}"))
    chi = np.array([effect_coords(A / hilbert_dim, basis) for A in wf.phase_point_ops])
    entry = build_frame(system, chi, tol, labels=[f"{q},{p}" for q, p in wf.points])
    frame_vecs = np.array([state_coords(A, basis) for A in wf.phase_point_ops])
    if np.max(np.abs(entry.frame - frame_vecs)) > 1e-8:
        raise FrameError("frame vectors do not match the phase-point operators")
    return wf, entry


def toy_bit_chi() -> np.ndarray:
    """Dual-frame rows ``(1, sx, sy, sz)/4`` for the tetrahedron ``(+++), (--+), (+--), (-+-)``."""
    signs = np.array([[1, 1, 1], [-1, -1, 1], [1, -1, -1], [-1, 1, -1]])
    return np.hstack([np.ones((4, 1)), signs]) / 4.0


def toy_bit_frame(basis: HermitianBasis | None = None) -> FrameEntry:
    basis = basis or pauli_basis()
    if basis.hilbert_dim != 2 or abs(basis.scale - np.sqrt(2)) > 1e-12:
        raise FrameError("the toy-bit frame is defined in qubit Pauli coordinates")
    return build_frame(basis.system("qubit"), toy_bit_chi(), labels=["a", "b", "c", "d"])


def eight_state_chi() -> np.ndarray:
    """Overcomplete 8-row response matrix: the cube vertices ``(1, sx, sy, sz)/8``."""
    signs = np.array(list(product((1, -1), repeat=3)))
    return np.hstack([np.ones((8, 1)), signs]) / 8.0


def negativity(model: FrameModel, item, tol: float = DEFAULT_TOL) -> float:
    """Most negative entry of the representation (0 when nonnegative up to ``tol``)."""
    lo = float(np.min(represent(model, item)))
    return lo if lo < -tol else 0.0


def frame_min_eigenvalue(entry: FrameEntry, basis: HermitianBasis) -> float:
    """Smallest eigenvalue over the operators of all ``F_l`` and ``D*_l``."""
    lo = np.inf
    for F in entry.frame:
        lo = min(lo, float(np.min(np.linalg.eigvalsh(state_operator(F, basis)))))
    for D in entry.dual_frame:
        lo = min(lo, float(np.min(np.linalg.eigvalsh(effect_operator(D, basis)))))
    return lo


# ---------------------------------------------------------------------------
# real-amplitude stabilizer dimension count
# ---------------------------------------------------------------------------

def symmetric_dim(n: int) -> int:
    """Dimension of real symmetric ``n x n`` matrices."""
    return n * (n + 1) // 2


def hermitian_dim(n: int) -> int:
    return n * n


def _two_qutrit_stabilizer_kets() -> list[np.ndarray]:
    """All 360 two-qutrit stabilizer states by orbit enumeration from |00>."""
    F, S = fourier_gate(3), phase_gate(3)
    I = np.eye(3)
    csum = np.zeros((9, 9), dtype=complex)
    for a, b in product(range(3), repeat=2):
        csum[a * 3 + (a + b) % 3, a * 3 + b] = 1
    gens = [np.kron(F, I), np.kron(I, F), np.kron(S, I), np.kron(I, S), csum]
    start = np.zeros(9, dtype=complex)
    start[0] = 1

    def key(v):
        k = int(np.argmax(np.abs(v) > 1e-9))
        v = v * np.exp(-1j * np.angle(v[k]))
        return tuple(np.round(np.concatenate([v.real, v.imag]), 8)), v

    seen = {key(start)[0]: start}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                k, w = key(g @ v)
                if k not in seen:
                    seen[k] = w
                    nxt.append(w)
        frontier = nxt
    return list(seen.values())


def real_stabilizer_span_dims() -> tuple[int, int, int]:
    """Span dimensions ``(dim A, dim B, dim AB)`` of the real-amplitude qutrit stabilizer states.

    Computed by enumerating stabilizer kets, keeping those that are real up
    to a global phase, and taking the rank of their density matrices.
    """
    def real_kets(kets):
        out = []
        for v in kets:
            k = int(np.argmax(np.abs(v) > 1e-9))
            w = v * np.exp(-1j * np.angle(v[k]))
            if np.max(np.abs(w.imag)) < 1e-9:
                out.append(w.real)
        return out

    def span(kets):
        mats = np.array([np.outer(v, v).ravel() for v in kets])
        return int(np.linalg.matrix_rank(mats, tol=1e-8))

    single = span(real_kets(_stabilizer_kets(3)))
    joint = span(real_kets(_two_qutrit_stabilizer_kets()))
    return single, single, joint
