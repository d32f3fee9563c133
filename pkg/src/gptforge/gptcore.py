"""Core GPT data model: systems, states, effects and transformations.

Everything lives in real vector spaces. Transformations are stored in the
form that composes by plain matrix product (sequential) and Kronecker
product (parallel).

Tensor index convention (pinned, row-major): for a composite of ``A`` and
``B`` the basis vector ``a_i (x) b_j`` has index ``i * dim(B) + j``. This is
exactly ``numpy.kron``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CompositeNotRegistered, DimensionMismatch, SystemMismatch
from .linalg import DEFAULT_TOL


def _frozen_array(x, ndim: int) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A GPT system of dimension ``dim`` with deterministic effect ``unit_effect``.

    ``factors`` is empty for elementary systems and holds the ids of the
    parents for a registered composite.
    """

    id: str
    dim: int
    unit_effect: np.ndarray
    factors: tuple[str, ...] = ()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"system {self.id!r}: dim must be >= 1, got {self.dim}")
        u = _frozen_array(self.unit_effect, 1)
        if u.shape[0] != self.dim:
            raise DimensionMismatch(f"system {self.id!r}: unit effect has length {u.shape[0]}, dim is {self.dim}")
        if not np.any(u):
            raise ValueError(f"system {self.id!r}: unit effect must be nonzero")
        object.__setattr__(self, "unit_effect", u)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "factors", tuple(self.factors))

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return (
            self.id == other.id
            and self.dim == other.dim
            and self.factors == other.factors
            and np.array_equal(self.unit_effect, other.unit_effect)
        )

    def __hash__(self):
        return hash((self.id, self.dim, self.factors))

    @property
    def is_composite(self) -> bool:
        return bool(self.factors)


def classical_system(n: int, id: str | None = None) -> SystemSpec:
    """The n-outcome classical system: simplex states, unit effect all-ones."""
    return SystemSpec(id or f"C{n}", n, np.ones(n))


def composite(a: SystemSpec, b: SystemSpec, id: str | None = None) -> SystemSpec:
    """Register the composite ``a (x) b`` (row-major index order)."""
    return SystemSpec(
        id or f"{a.id}*{b.id}",
        a.dim * b.dim,
        np.kron(a.unit_effect, b.unit_effect),
        factors=(a.id, b.id),
    )


def find_composite(a: SystemSpec, b: SystemSpec, systems: Iterable[SystemSpec]) -> SystemSpec:
    for s in systems:
        if s.factors == (a.id, b.id):
            return s
    raise CompositeNotRegistered(f"no composite registered for ({a.id}, {b.id})")


@dataclass(frozen=True, eq=False)
class GptState:
    system: SystemSpec
    vec: np.ndarray
    normalized: bool = True
    label: str = ""

    def __post_init__(self):
        v = _frozen_array(self.vec, 1)
        if v.shape[0] != self.system.dim:
            raise DimensionMismatch(f"state of length {v.shape[0]} on system {self.system.id!r} of dim {self.system.dim}")
        object.__setattr__(self, "vec", v)

    @property
    def norm(self) -> float:
        """Value of the unit effect on this state."""
        return float(self.system.unit_effect @ self.vec)


@dataclass(frozen=True, eq=False)
class GptEffect:
    system: SystemSpec
    covec: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = _frozen_array(self.covec, 1)
        if c.shape[0] != self.system.dim:
            raise DimensionMismatch(f"effect of length {c.shape[0]} on system {self.system.id!r} of dim {self.system.dim}")
        object.__setattr__(self, "covec", c)


@dataclass(frozen=True, eq=False)
class GptTransformation:
    in_system: SystemSpec
    out_system: SystemSpec
    mat: np.ndarray
    channel: bool = False
    label: str = ""

    def __post_init__(self):
        m = _frozen_array(self.mat, 2)
        if m.shape != (self.out_system.dim, self.in_system.dim):
            raise DimensionMismatch(
                f"transformation matrix {m.shape} does not match "
                f"{self.out_system.id}({self.out_system.dim}) <- {self.in_system.id}({self.in_system.dim})"
            )
        object.__setattr__(self, "mat", m)

    def channel_residual(self) -> float:
        """max |u_out . M - u_in|; zero for an exact channel."""
        return float(np.max(np.abs(self.out_system.unit_effect @ self.mat - self.in_system.unit_effect)))

    def apply(self, state: GptState) -> GptState:
        if state.system != self.in_system:
            raise SystemMismatch(f"state on {state.system.id!r} fed to transformation from {self.in_system.id!r}")
        return GptState(self.out_system, self.mat @ state.vec, state.normalized and self.channel)

    def linear_combination(self, alpha: float, other: "GptTransformation", beta: float) -> "GptTransformation":
        if (self.in_system, self.out_system) != (other.in_system, other.out_system):
            raise SystemMismatch("linear combination of transformations on different systems")
        return GptTransformation(self.in_system, self.out_system, alpha * self.mat + beta * other.mat, False)


def identity(system: SystemSpec) -> GptTransformation:
    return GptTransformation(system, system, np.eye(system.dim), True, label=f"id_{system.id}")


@dataclass(frozen=True)
class GptFragment:
    """A finite GPT fragment: systems plus lists of states, effects, transformations.

    ``state_cone_rays``/``effect_cone_rays`` optionally map a system id to
    generators of the positive cones (rows of a 2-d array).
    """

    systems: tuple[SystemSpec, ...]
    states: tuple[GptState, ...] = ()
    effects: tuple[GptEffect, ...] = ()
    transformations: tuple[GptTransformation, ...] = ()
    state_cone_rays: Mapping[str, np.ndarray] = field(default_factory=dict)
    effect_cone_rays: Mapping[str, np.ndarray] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(self.systems))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "effects", tuple(self.effects))
        object.__setattr__(self, "transformations", tuple(self.transformations))
        object.__setattr__(
            self, "state_cone_rays", {k: _frozen_array(v, 2) for k, v in dict(self.state_cone_rays).items()}
        )
        object.__setattr__(
            self, "effect_cone_rays", {k: _frozen_array(v, 2) for k, v in dict(self.effect_cone_rays).items()}
        )

    def system(self, id: str) -> SystemSpec:
        for s in self.systems:
            if s.id == id:
                return s
        raise KeyError(id)

    def states_on(self, system: SystemSpec | str) -> list[GptState]:
        sid = system if isinstance(system, str) else system.id
        return [s for s in self.states if s.system.id == sid]

    def effects_on(self, system: SystemSpec | str) -> list[GptEffect]:
        sid = system if isinstance(system, str) else system.id
        return [e for e in self.effects if e.system.id == sid]

    def prepare_measure(self) -> "GptFragment":
        """The same fragment with all transformations dropped."""
        return GptFragment(
            self.systems, self.states, self.effects, (), self.state_cone_rays, self.effect_cone_rays, self.name
        )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(effect: GptEffect, transform: GptTransformation | None, state: GptState) -> float:
    """Probability ``effect . transform . state``; ``transform=None`` means identity."""
    if transform is None:
        if effect.system != state.system:
            raise DimensionMismatch(f"effect on {effect.system.id!r} applied to state on {state.system.id!r}")
        return float(effect.covec @ state.vec)
    if transform.in_system != state.system:
        raise DimensionMismatch(f"state on {state.system.id!r} does not match input {transform.in_system.id!r}")
    if transform.out_system != effect.system:
        raise DimensionMismatch(f"effect on {effect.system.id!r} does not match output {transform.out_system.id!r}")
    return float(effect.covec @ transform.mat @ state.vec)


def compose_seq(t2: GptTransformation, t1: GptTransformation) -> GptTransformation:
    """``t2`` after ``t1``."""
    if t1.out_system != t2.in_system:
        raise SystemMismatch(f"cannot compose: {t1.out_system.id!r} output into {t2.in_system.id!r} input")
    return GptTransformation(
        t1.in_system, t2.out_system, t2.mat @ t1.mat, t1.channel and t2.channel,
        label=f"{t2.label}.{t1.label}" if t1.label and t2.label else "",
    )


def compose_par(t1: GptTransformation, t2: GptTransformation, systems: Iterable[SystemSpec]) -> GptTransformation:
    """``t1 (x) t2``; both composite systems must appear in ``systems``."""
    systems = list(systems)
    cin = find_composite(t1.in_system, t2.in_system, systems)
    cout = find_composite(t1.out_system, t2.out_system, systems)
    return GptTransformation(cin, cout, np.kron(t1.mat, t2.mat), t1.channel and t2.channel)


def tensor_states(s1: GptState, s2: GptState, systems: Iterable[SystemSpec]) -> GptState:
    c = find_composite(s1.system, s2.system, systems)
    return GptState(c, np.kron(s1.vec, s2.vec), s1.normalized and s2.normalized)


def tensor_effects(e1: GptEffect, e2: GptEffect, systems: Iterable[SystemSpec]) -> GptEffect:
    c = find_composite(e1.system, e2.system, systems)
    return GptEffect(c, np.kron(e1.covec, e2.covec))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    magnitude: float
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    tol: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _cone_membership_residual(rays: np.ndarray, x: np.ndarray) -> float:
    """Residual of the best nonnegative combination of ``rays`` approximating ``x``."""
    from .embed.simplex import membership_residual

    return membership_residual(np.asarray(rays, dtype=float).T, np.asarray(x, dtype=float))


def validate_fragment(f: GptFragment, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check every type invariant of ``f`` and report all violations."""
    out: list[Violation] = []
    ids = [s.id for s in f.systems]
    for sid in set(ids):
        if ids.count(sid) > 1:
            out.append(Violation("system", sid, float(ids.count(sid)), f"system id {sid!r} registered twice"))
    by_id = {s.id: s for s in f.systems}
    for s in f.systems:
        for p in s.factors:
            if p not in by_id:
                out.append(Violation("composite", s.id, 1.0, f"composite {s.id!r} refers to unknown factor {p!r}"))
        if s.factors and all(p in by_id for p in s.factors):
            a, b = (by_id[p] for p in s.factors)
            dev = float(np.max(np.abs(np.kron(a.unit_effect, b.unit_effect) - s.unit_effect))) if s.dim == a.dim * b.dim else np.inf
            if dev > tol:
                out.append(Violation("composite", s.id, dev, f"composite {s.id!r} is not the tensor of its factors"))

    for i, st in enumerate(f.states):
        if st.system.id not in by_id:
            out.append(Violation("state", f"state[{i}]", 1.0, f"state on unregistered system {st.system.id!r}"))
        n = st.norm
        if st.normalized and abs(n - 1.0) > tol:
            out.append(Violation("state", f"state[{i}]", abs(n - 1.0), f"u.s={n:.12g} != 1"))
        elif not st.normalized and (n < -tol or n > 1 + tol):
            out.append(Violation("state", f"state[{i}]", max(-n, n - 1), f"u.s={n:.12g} outside [0,1]"))

    for j, ef in enumerate(f.effects):
        for i, st in enumerate(f.states):
            if st.system != ef.system:
                continue
            p = float(ef.covec @ st.vec)
            if p > 1 + tol:
                out.append(Violation("effect", f"effect[{j}] on state[{i}]", p - 1, f"evaluate={p:.12g}>1"))
            elif p < -tol:
                out.append(Violation("effect", f"effect[{j}] on state[{i}]", -p, f"evaluate={p:.12g}<0"))

    for k, t in enumerate(f.transformations):
        if t.channel:
            r = t.channel_residual()
            if r > tol:
                out.append(Violation("transformation", f"transformation[{k}]", r, f"u_out.M != u_in (residual {r:.3g})"))
        for i, st in enumerate(f.states):
            if st.system != t.in_system:
                continue
            img = t.mat @ st.vec
            for j, ef in enumerate(f.effects):
                if ef.system != t.out_system:
                    continue
                p = float(ef.covec @ img)
                if p > 1 + tol or p < -tol:
                    out.append(Violation(
                        "transformation", f"effect[{j}].transformation[{k}].state[{i}]",
                        max(p - 1, -p), f"evaluate={p:.12g} outside [0,1]",
                    ))

    for sid, rays in f.state_cone_rays.items():
        for i, st in enumerate(f.states):
            if st.system.id == sid:
                r = _cone_membership_residual(rays, st.vec)
                if r > tol * 10:
                    out.append(Violation("cone", f"state[{i}]", r, f"state not in the state cone of {sid!r}"))
    for sid, rays in f.effect_cone_rays.items():
        for j, ef in enumerate(f.effects):
            if ef.system.id == sid:
                r = _cone_membership_residual(rays, ef.covec)
                if r > tol * 10:
                    out.append(Violation("cone", f"effect[{j}]", r, f"effect not in the effect cone of {sid!r}"))
    return ValidationReport(tuple(out), tol)


def random_transformation(rng: np.random.Generator, a: SystemSpec, b: SystemSpec, channel: bool = True) -> GptTransformation:
    """A random linear map, corrected to preserve the unit effect when ``channel``."""
    m = rng.uniform(-1, 1, size=(b.dim, a.dim))
    if channel:
        ub = b.unit_effect
        m = m + np.outer(ub, a.unit_effect - ub @ m) / (ub @ ub)
    return GptTransformation(a, b, m, channel)


def stack_vectors(items: Sequence[GptState] | Sequence[GptEffect]) -> np.ndarray:
    """Rows are the state vectors / effect covectors of ``items``."""
    if not items:
        return np.zeros((0, 0))
    return np.array([getattr(x, "vec", None) if isinstance(x, GptState) else x.covec for x in items])
