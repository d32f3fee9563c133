"""Frame and dual-frame representations of GPT fragments.

A frame on a system is parameterized by an invertible matrix ``chi`` whose
rows are the dual-frame covectors ``D_l``. The frame vectors ``F_l`` are the
columns of ``chi^{-1}`` and are never stored independently, so the
biorthogonality ``D_l'(F_l) = delta`` holds by construction.

A process ``T`` from ``A`` to ``B`` is represented by the (quasi)stochastic
matrix ``chi_B @ T @ chi_A^{-1}``; a state ``s`` by ``chi @ s``; an effect
``e`` by ``e @ chi^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CompositeNotRegistered, FrameError, SystemMismatch
from .gptcore import GptEffect, GptFragment, GptState, GptTransformation, SystemSpec
from .linalg import DEFAULT_TOL, numerical_rank


@dataclass(frozen=True)
class OnticSpace:
    system_id: str
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise FrameError("ontic space must have at least one state")
        if len(set(labels)) != len(labels):
            raise FrameError("ontic labels must be unique")
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class FrameEntry:
    """Frame data for one system."""

    system: SystemSpec
    ontic: OnticSpace
    chi: np.ndarray
    chi_inv: np.ndarray
    exact: bool = True
    normalization_residual: float = 0.0
    biorthogonality_residual: float = 0.0

    @property
    def n(self) -> int:
        return self.ontic.size

    @property
    def dual_frame(self) -> np.ndarray:
        """Rows are the covectors ``D_l``."""
        return self.chi

    @property
    def frame(self) -> np.ndarray:
        """Rows are the vectors ``F_l``."""
        return self.chi_inv.T


@dataclass(frozen=True)
class FrameModel:
    entries: Mapping[str, FrameEntry] = field(default_factory=dict)
    composite_registry: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __getitem__(self, system_id: str) -> FrameEntry:
        try:
            return self.entries[system_id]
        except KeyError:
            raise FrameError(f"system {system_id!r} is not registered in the frame model") from None

    def __contains__(self, system_id: str) -> bool:
        return system_id in self.entries

    def with_entry(self, entry: FrameEntry) -> "FrameModel":
        entries = dict(self.entries)
        entries[entry.system.id] = entry
        return FrameModel(entries, dict(self.composite_registry))

    def with_composite(self, system: SystemSpec) -> "FrameModel":
        """Register a composite system with the product frame of its factors."""
        if len(system.factors) != 2:
            raise CompositeNotRegistered(f"{system.id!r} is not a registered composite")
        a, b = (self[f] for f in system.factors)
        chi = np.kron(a.chi, b.chi)
        labels = tuple(f"{x},{y}" for x in a.ontic.labels for y in b.ontic.labels)
        entry = FrameEntry(
            system, OnticSpace(system.id, labels), chi, np.kron(a.chi_inv, b.chi_inv), a.exact and b.exact,
            max(a.normalization_residual, b.normalization_residual),
            max(a.biorthogonality_residual, b.biorthogonality_residual),
        )
        model = self.with_entry(entry)
        reg = dict(model.composite_registry)
        reg[system.id] = tuple(system.factors)
        return FrameModel(model.entries, reg)


def build_frame(
    system: SystemSpec,
    chi,
    tol: float = DEFAULT_TOL,
    labels: Sequence[str] | None = None,
    allow_overcomplete: bool = False,
) -> FrameEntry:
    """Build the frame entry for ``system`` from the dual-frame matrix ``chi``.

    With ``allow_overcomplete`` an ``n x dim`` matrix with ``n != dim`` is
    accepted; the frame vectors are then taken from the pseudo-inverse and
    the entry is flagged as not exact.
    """
    chi = np.array(chi, dtype=float)
    if chi.ndim != 2 or chi.shape[1] != system.dim:
        raise FrameError(f"chi must have {system.dim} columns, got shape {chi.shape}")
    n = chi.shape[0]
    if labels is None:
        labels = [str(i) for i in range(n)]
    ontic = OnticSpace(system.id, tuple(labels))
    if ontic.size != n:
        raise FrameError(f"{ontic.size} labels for {n} rows of chi")
    if n != system.dim and not allow_overcomplete:
        raise FrameError(f"chi has {n} rows but dim is {system.dim}; pass allow_overcomplete for fragment-level models")
    rank = numerical_rank(chi, tol)
    if rank < system.dim:
        raise FrameError(f"singular chi: rank {rank} < {system.dim}")
    norm_res = float(np.max(np.abs(chi.sum(axis=0) - system.unit_effect)))
    if norm_res > tol:
        raise FrameError(f"normalization failure: sum of D_l differs from the unit effect by {norm_res:.3g}")
    if n == system.dim:
        chi_inv = np.linalg.solve(chi, np.eye(n))
        exact = True
        bi = float(np.max(np.abs(chi @ chi_inv - np.eye(n))))
    else:
        chi_inv = np.linalg.pinv(chi)
        exact = False
        bi = float(np.max(np.abs(chi_inv @ chi - np.eye(system.dim))))
    u_on_frame = system.unit_effect @ chi_inv
    fr = float(np.max(np.abs(u_on_frame - 1.0)))
    if exact and fr > max(tol, 1e-9) * 10:
        raise FrameError(f"frame vectors not normalized: max |u(F_l) - 1| = {fr:.3g}")
    chi.setflags(write=False)
    chi_inv.setflags(write=False)
    return FrameEntry(system, ontic, chi, chi_inv, exact, norm_res, bi)


def frame_model(*entries: FrameEntry, composites: Iterable[SystemSpec] = ()) -> FrameModel:
    model = FrameModel({e.system.id: e for e in entries})
    for c in composites:
        model = model.with_composite(c)
    return model


# ---------------------------------------------------------------------------
# representation
# ---------------------------------------------------------------------------

def represent(model: FrameModel, item) -> np.ndarray:
    """Quasiprobabilistic representation of a state, effect or transformation."""
    if isinstance(item, GptTransformation):
        a, b = model[item.in_system.id], model[item.out_system.id]
        return b.chi @ item.mat @ a.chi_inv
    if isinstance(item, GptState):
        return model[item.system.id].chi @ item.vec
    if isinstance(item, GptEffect):
        return item.covec @ model[item.system.id].chi_inv
    raise TypeError(f"cannot represent {type(item).__name__}")


@dataclass(frozen=True, eq=False)
class ProcessRepresentation:
    kind: str            # "state" | "effect" | "transformation"
    name: str
    matrix: np.ndarray
    min_entry: float
    quasistochastic: bool
    deviation: float     # normalization deviation


@dataclass(frozen=True)
class QuasiModelReport:
    processes: tuple[ProcessRepresentation, ...]
    min_entry: float
    quasistochastic: bool
    positive: bool
    tol: float
    witness: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema": "report.v1",
            "tol": self.tol,
            "min_entry": self.min_entry,
            "quasistochastic": self.quasistochastic,
            "positive": self.positive,
            "witness": self.witness,
            "processes": [
                {
                    "kind": p.kind, "name": p.name, "min_entry": p.min_entry,
                    "quasistochastic": p.quasistochastic,
                    "shape": list(np.atleast_2d(p.matrix).shape),
                    "matrix": np.asarray(p.matrix, dtype=float).ravel().tolist(),
                }
                for p in self.processes
            ],
        }


def _name(kind: str, i: int, item) -> str:
    lab = getattr(item, "label", "")
    return f"{kind}[{i}]" + (f":{lab}" if lab else "")


def positivity_report(model: FrameModel, fragment: GptFragment, tol: float = DEFAULT_TOL) -> QuasiModelReport:
    """Represent every state, effect and transformation of ``fragment`` and test positivity.

    States must map to quasidistributions summing to ``u(s)``; effects are
    response functions (no normalization constraint); channels must map to
    matrices whose columns sum to one.
    """
    procs: list[ProcessRepresentation] = []
    for i, s in enumerate(fragment.states):
        r = represent(model, s)
        dev = abs(float(r.sum()) - s.norm)
        procs.append(ProcessRepresentation("state", _name("state", i, s), r, float(r.min()), dev <= tol, dev))
    for j, e in enumerate(fragment.effects):
        r = represent(model, e)
        procs.append(ProcessRepresentation("effect", _name("effect", j, e), r, float(r.min()), True, 0.0))
    for k, t in enumerate(fragment.transformations):
        r = represent(model, t)
        if t.channel:
            dev = float(np.max(np.abs(r.sum(axis=0) - 1.0)))
        else:
            dev = 0.0
        procs.append(ProcessRepresentation("transformation", _name("transformation", k, t), r, float(r.min()), dev <= tol, dev))
    if not procs:
        return QuasiModelReport((), 0.0, True, True, tol, None)
    worst = min(procs, key=lambda p: p.min_entry)
    min_entry = worst.min_entry
    return QuasiModelReport(
        tuple(procs), min_entry, all(p.quasistochastic for p in procs), min_entry >= -tol, tol,
        worst.name if min_entry < -tol else None,
    )


@dataclass(frozen=True)
class OntologicalModel:
    """A positive quasiprobabilistic model relabelled as an ontological model."""

    states: Mapping[str, np.ndarray]
    effects: Mapping[str, np.ndarray]
    transformations: Mapping[str, np.ndarray]


@dataclass(frozen=True)
class Refusal:
    reason: str
    witness: str | None
    min_entry: float


def quasi_to_ontological(report: QuasiModelReport) -> OntologicalModel | Refusal:
    """Relabel a positive report as an ontological model, or refuse with a witness."""
    if not report.positive:
        return Refusal(
            f"representation has negative entries (most negative {report.min_entry:.6g} in {report.witness})",
            report.witness, report.min_entry,
        )
    if not report.quasistochastic:
        bad = next(p.name for p in report.processes if not p.quasistochastic)
        return Refusal(f"{bad} is not normalized", bad, report.min_entry)
    # clip the -tol..0 band so the emitted matrices are genuinely (sub)stochastic
    groups: dict[str, dict[str, np.ndarray]] = {"state": {}, "effect": {}, "transformation": {}}
    for p in report.processes:
        m = np.clip(np.asarray(p.matrix, dtype=float), 0.0, None)
        if p.kind == "effect":
            m = np.clip(m, 0.0, 1.0)
        groups[p.kind][p.name] = m
    return OntologicalModel(groups["state"], groups["effect"], groups["transformation"])


# ---------------------------------------------------------------------------
# structure verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureVerdict:
    passed: bool
    adequacy_residual: float
    inverse_residual: float
    invertible: bool
    location: str | None
    tol: float


def verify_structure(
    rep_states: np.ndarray,
    rep_effects: np.ndarray,
    fragment: GptFragment,
    tol: float = DEFAULT_TOL,
    system: str | None = None,
) -> StructureVerdict:
    """Check that a linear state map and effect map form an inverse pair.

    ``rep_states`` (``n x dim``) sends a state vector to its ontic
    distribution; ``rep_effects`` (``dim x n``) sends an effect covector ``e``
    to the response function ``e @ rep_effects``. Empirical adequacy is
    checked on every (effect, state) pair of the fragment; when
    ``rep_states`` is square the effect map must equal its inverse.
    """
    Rs = np.asarray(rep_states, dtype=float)
    Re = np.asarray(rep_effects, dtype=float)
    sid = system or fragment.systems[0].id
    states = fragment.states_on(sid)
    effects = fragment.effects_on(sid)
    if Rs.ndim != 2 or Re.ndim != 2 or Re.shape != (Rs.shape[1], Rs.shape[0]):
        raise FrameError(f"incompatible shapes {Rs.shape} and {Re.shape}")
    adequacy, loc = 0.0, None
    for j, e in enumerate(effects):
        re = e.covec @ Re
        for i, s in enumerate(states):
            diff = abs(float(re @ (Rs @ s.vec)) - float(e.covec @ s.vec))
            if diff > adequacy:
                adequacy, loc = diff, f"effect[{j}] on state[{i}]"
    square = Rs.shape[0] == Rs.shape[1]
    invertible = square and numerical_rank(Rs, tol) == Rs.shape[0]
    inverse_res = np.inf
    if square and not invertible:
        dim_span = numerical_rank(np.array([s.vec for s in states]), tol) if states else 0
        if dim_span == Rs.shape[1]:
            raise FrameError("rep_states is singular while the fragment spans the full space")
    if invertible:
        inv = np.linalg.solve(Rs, np.eye(Rs.shape[0]))
        dev = np.abs(Re - inv)
        inverse_res = float(dev.max())
        if inverse_res > tol and (loc is None or adequacy <= tol):
            i, j = np.unravel_index(np.argmax(dev), dev.shape)
            loc = f"rep_effects[{i},{j}]"
    passed = adequacy <= tol and invertible and inverse_res <= tol
    return StructureVerdict(passed, adequacy, inverse_res, invertible, loc if not passed else None, tol)


@dataclass(frozen=True)
class ExactnessVerdict:
    passed: bool
    n_ontic: int
    dim: int
    gamma: float
    full_rank: bool


def exactness_check(model: FrameModel, system: str | SystemSpec) -> ExactnessVerdict:
    """Pass iff the frame has as many ontic states as the GPT dimension.

    ``gamma`` is the ratio ontic count / dimension (the excess-baggage factor).
    """
    entry = model[system if isinstance(system, str) else system.id]
    n, dim = entry.n, entry.system.dim
    full = numerical_rank(entry.chi) == min(n, dim)
    return ExactnessVerdict(n == dim and full, n, dim, n / dim, full)


# ---------------------------------------------------------------------------
# random frames
# ---------------------------------------------------------------------------

def sample_square_frame(system: SystemSpec, rng: np.random.Generator, max_tries: int = 100) -> FrameEntry:
    """A random valid square frame on ``system``.

    ``chi = I + G`` with ``G`` uniform in ``[-1, 1]``, rows rescaled to unit
    max-norm, then one affine correction that makes the rows sum to the
    unit effect. Draws that come out singular or ill-conditioned are
    rejected.
    """
    d = system.dim
    u = system.unit_effect
    for _ in range(max_tries):
        chi = np.eye(d) + rng.uniform(-1.0, 1.0, size=(d, d))
        chi = chi / np.max(np.abs(chi), axis=1, keepdims=True) / d
        chi = chi + (u - chi.sum(axis=0))[None, :] / d
        if np.linalg.cond(chi) > 1e8:
            continue
        try:
            return build_frame(system, chi)
        except FrameError:
            continue
    raise FrameError("could not sample a nonsingular frame")
