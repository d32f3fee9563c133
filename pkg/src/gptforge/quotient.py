"""From operational statistics to a GPT fragment.

Every procedure carries its statistics on a fixed, finite list of local
testers:

* a state on ``A`` (signature ``(None, "A")``) is tested by effects on ``A``;
* an effect on ``A`` (signature ``("A", None)``) is tested by states on ``A``;
* a transformation ``A -> B`` is tested by pairs (effect tester of ``B``-states,
  state tester of ``A``-effects), stored row-major: index ``k * n_states + j``.

Procedures whose statistics agree within ``tol`` form one class. For each
system a spanning subset of state classes is chosen (first-seen pivoting);
states become their expansion coefficients in that basis, effects their
values on the basis states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import QuotientError
from .gptcore import GptEffect, GptFragment, GptState, GptTransformation, SystemSpec
from .linalg import DEFAULT_TOL, independent_rows

KINDS = ("state", "effect", "transformation")


def signature_key(signature: tuple[str | None, str | None]) -> str:
    a, b = signature
    return f"{a or ''}->{b or ''}"


@dataclass(frozen=True, eq=False)
class Procedure:
    id: str
    context: str
    signature: tuple[str | None, str | None]
    stats: np.ndarray
    wiring: tuple | None = None    # ("seq", later_id, earlier_id) or ("par", first_id, second_id)

    def __post_init__(self):
        sig = tuple(self.signature)
        if len(sig) != 2 or sig == (None, None):
            raise QuotientError(f"procedure {self.id!r}: signature needs an input or an output system")
        object.__setattr__(self, "signature", sig)
        stats = np.array(self.stats, dtype=float).ravel()
        stats.setflags(write=False)
        object.__setattr__(self, "stats", stats)
        if self.wiring is not None:
            object.__setattr__(self, "wiring", tuple(self.wiring))

    @property
    def kind(self) -> str:
        a, b = self.signature
        if a is None:
            return "state"
        if b is None:
            return "effect"
        return "transformation"

    @property
    def key(self) -> tuple[str, str]:
        return (self.id, self.context)


@dataclass(frozen=True)
class TesterSet:
    id: str
    labels: tuple[str, ...]

    __test__ = False   # not a pytest class despite the name

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise QuotientError(f"tester set {self.id!r} is empty")

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class StatsTable:
    testers: Mapping[str, TesterSet]
    procedures: tuple[Procedure, ...]
    deterministic_effect_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "testers", dict(self.testers))
        object.__setattr__(self, "procedures", tuple(self.procedures))
        object.__setattr__(self, "deterministic_effect_ids", tuple(self.deterministic_effect_ids))

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        seen = set()
        for p in self.procedures:
            if p.key in seen:
                raise QuotientError(f"duplicate procedure {p.id!r} in context {p.context!r}")
            seen.add(p.key)
            key = signature_key(p.signature)
            if key not in self.testers:
                raise QuotientError(f"inconsistent signature: no tester set for {key!r} (procedure {p.id!r})")
            if len(p.stats) != self.testers[key].size:
                raise QuotientError(
                    f"inconsistent signature: {p.id!r} has {len(p.stats)} entries, tester set {key!r} has {self.testers[key].size}"
                )
            if p.stats.size and (p.stats.min() < -tol or p.stats.max() > 1 + tol):
                raise QuotientError(f"procedure {p.id!r} has statistics outside [0, 1]")
        ids = {p.id for p in self.procedures}
        for p in self.procedures:
            if p.wiring is not None:
                for ref in p.wiring[1:]:
                    if ref not in ids:
                        raise QuotientError(f"wiring of {p.id!r} references unknown procedure {ref!r}")

    def find(self, pid: str) -> list[Procedure]:
        return [p for p in self.procedures if p.id == pid]

    def first(self, pid: str) -> Procedure:
        found = self.find(pid)
        if not found:
            raise QuotientError(f"unknown procedure {pid!r}")
        return found[0]


# ---------------------------------------------------------------------------
# grouping
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # the earlier index stays root, so class order follows first appearance
            lo, hi = min(ri, rj), max(ri, rj)
            self.parent[hi] = lo


def group(stats: Sequence[np.ndarray], tol: float, names: Sequence[str] | None = None) -> list[int]:
    """Class index per row: union of all pairs within ``tol`` (max norm).

    Raises :class:`QuotientError` when the grouping depends on chaining: a
    class whose members are more than ``2 tol`` apart, or two classes with
    members within ``2 tol`` of each other.
    """
    n = len(stats)
    names = list(names) if names is not None else [str(i) for i in range(n)]
    X = np.array(stats, dtype=float).reshape(n, -1)
    dist = np.max(np.abs(X[:, None, :] - X[None, :, :]), axis=2) if n else np.zeros((0, 0))
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] <= tol:
                uf.union(i, j)
    roots = [uf.find(i) for i in range(n)]
    order = {r: k for k, r in enumerate(dict.fromkeys(roots))}
    labels = [order[r] for r in roots]
    for i in range(n):
        for j in range(i + 1, n):
            same = labels[i] == labels[j]
            if same and dist[i, j] > 2 * tol:
                raise QuotientError(
                    f"tol-chaining ambiguity: {names[i]} and {names[j]} share a class through intermediates but differ by "
                    f"{dist[i, j]:.3g}; use a smaller tol or cleaner data"
                )
            if not same and dist[i, j] <= 2 * tol:
                raise QuotientError(
                    f"tol-chaining ambiguity: {names[i]} and {names[j]} differ by only {dist[i, j]:.3g} but fall in "
                    f"different classes; use a smaller tol or cleaner data"
                )
    return labels


# ---------------------------------------------------------------------------
# quotient
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassMap:
    """Sends each ``(id, context)`` to a class label such as ``"->A#0"``."""

    assignment: dict[tuple[str, str], str]
    representatives: dict[str, np.ndarray]     # class label -> statistics of its first member
    bases: dict[str, tuple[str, ...]]          # system id -> class labels of the basis states

    def of(self, pid: str, context: str) -> str:
        try:
            return self.assignment[(pid, context)]
        except KeyError:
            raise QuotientError(f"procedure {pid!r} in context {context!r} is not in the class map") from None

    def members(self, label: str) -> list[tuple[str, str]]:
        return [k for k, v in self.assignment.items() if v == label]

    @property
    def classes(self) -> list[str]:
        return list(self.representatives)


def _expansion(target: np.ndarray, basis: np.ndarray, what: str, tol: float) -> np.ndarray:
    """Coefficients ``c`` with ``c @ basis = target`` (rows of ``basis``), checked."""
    c, *_ = np.linalg.lstsq(basis.T, target.T, rcond=None)
    res = float(np.max(np.abs(c.T @ basis - target))) if target.size else 0.0
    if res > max(tol, 1e-9) * 100:
        raise QuotientError(f"{what} lies outside the span of the basis (residual {res:.3g})")
    return c.T


def quotient(table: StatsTable, tol: float = DEFAULT_TOL) -> tuple[GptFragment, ClassMap]:
    table.validate(tol)
    by_key: dict[str, list[Procedure]] = {}
    for p in table.procedures:
        by_key.setdefault(signature_key(p.signature), []).append(p)

    assignment: dict[tuple[str, str], str] = {}
    reps: dict[str, np.ndarray] = {}
    class_kind: dict[str, tuple[str, tuple]] = {}
    for key, procs in by_key.items():
        labels = group([p.stats for p in procs], tol, [f"{p.id!r}/{p.context!r}" for p in procs])
        for p, k in zip(procs, labels):
            lab = f"{key}#{k}"
            assignment[p.key] = lab
            if lab not in reps:
                reps[lab] = np.array(p.stats)
                class_kind[lab] = (p.kind, p.signature)

    system_ids = list(dict.fromkeys(s for p in table.procedures for s in p.signature if s is not None))
    systems: dict[str, SystemSpec] = {}
    state_coords: dict[str, np.ndarray] = {}
    basis_rows: dict[str, np.ndarray] = {}
    bases: dict[str, tuple[str, ...]] = {}
    for sid in system_ids:
        labs = [l for l, (kind, sig) in class_kind.items() if kind == "state" and sig[1] == sid]
        if not labs:
            raise QuotientError(f"system {sid!r} has no state classes; cannot choose a basis")
        R = np.array([reps[l] for l in labs])
        idx = independent_rows(R, tol)
        B = R[idx]
        basis_rows[sid] = B
        bases[sid] = tuple(labs[i] for i in idx)
        systems[sid] = SystemSpec(sid, len(idx), np.ones(len(idx)))
        for l in labs:
            state_coords[l] = _expansion(reps[l][None, :], B, f"state class {l}", tol)[0]

    def tester_expansion(sid: str) -> np.ndarray:
        """Rows: basis state j of ``sid`` expanded in the state testers of ``sid``-effects."""
        ts = table.testers.get(f"{sid}->")
        if ts is None:
            raise QuotientError(f"no state testers declared for effects on {sid!r}")
        rows = []
        for tid in ts.labels:
            rows.append(table.first(tid).stats)
        T = np.array(rows)
        if T.shape[1] != basis_rows[sid].shape[1]:
            raise QuotientError(f"tester states for {sid!r} are not states on {sid!r}")
        return _expansion(basis_rows[sid], T, f"basis of {sid!r} in its tester states", tol)

    expansions: dict[str, np.ndarray] = {}

    def expansion(sid):
        if sid not in expansions:
            expansions[sid] = tester_expansion(sid)
        return expansions[sid]

    states, effects, transformations = [], [], []
    for lab, (kind, sig) in class_kind.items():
        if kind == "state":
            states.append(GptState(systems[sig[1]], state_coords[lab], True, lab))
        elif kind == "effect":
            a = expansion(sig[0])
            effects.append(GptEffect(systems[sig[0]], a @ reps[lab], lab))
        else:
            sa, sb = sig
            a = expansion(sa)
            n_s = a.shape[1]
            m_e = basis_rows[sb].shape[1]
            N = reps[lab].reshape(m_e, n_s)
            images = (N @ a.T).T                       # stats of T(b_j) on B's effect testers
            cols = _expansion(images, basis_rows[sb], f"image of {lab}", tol)
            transformations.append(GptTransformation(systems[sa], systems[sb], cols.T, False, lab))
    frag = GptFragment(
        tuple(systems.values()), tuple(states), tuple(effects), tuple(transformations), {}, {}, "quotient"
    )
    return frag, ClassMap(assignment, reps, bases)


def class_object(fragment: GptFragment, label: str):
    for item in (*fragment.states, *fragment.effects, *fragment.transformations):
        if item.label == label:
            return item
    raise QuotientError(f"class {label!r} has no GPT object")


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    ok: bool
    details: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_unique_deterministic_effect(table: StatsTable, tol: float = DEFAULT_TOL) -> CheckReport:
    ids = table.deterministic_effect_ids
    if not ids:
        raise QuotientError("no procedures are flagged as deterministic effects")
    procs = [p for pid in ids for p in table.find(pid)]
    if len(procs) < len(ids):
        missing = [pid for pid in ids if not table.find(pid)]
        raise QuotientError(f"flagged deterministic effects not in table: {missing}")
    details = []
    first = procs[0]
    for p in procs[1:]:
        if p.signature != first.signature:
            details.append(f"{first.id!r} and {p.id!r} act on different systems")
            continue
        dev = float(np.max(np.abs(p.stats - first.stats)))
        if dev > tol:
            details.append(f"{first.id!r} vs {p.id!r}: differ by {dev:.3g}")
    return CheckReport(not details, tuple(details))


def check_convex_closure(
    table: StatsTable, mixtures: Iterable[tuple[str, float, str, str]], tol: float = DEFAULT_TOL
) -> CheckReport:
    """Each ``(t1, w, t2, t3)`` must satisfy ``stats(t1) = w stats(t2) + (1 - w) stats(t3)``."""
    details = []
    for t1, w, t2, t3 in mixtures:
        p1, p2, p3 = table.first(t1), table.first(t2), table.first(t3)
        pred = w * p2.stats + (1 - w) * p3.stats
        diff = np.abs(p1.stats - pred)
        if diff.size and diff.max() > tol:
            k = int(np.argmax(diff))
            label = table.testers[signature_key(p1.signature)].labels[k]
            details.append(f"{t1!r} = {w:g}*{t2!r} + {1 - w:g}*{t3!r} fails at tester {label!r} by {diff[k]:.3g}")
    return CheckReport(not details, tuple(details))


def _product_stats(table: StatsTable, px: Procedure, py: Procedure) -> np.ndarray:
    """Statistics of the parallel composite on product testers.

    Transformation statistics are (effect tester, state tester) matrices, so
    the composite's rows pair effect testers and its columns pair state testers.
    """
    if px.kind != "transformation":
        return np.kron(px.stats, py.stats)
    shape = lambda p: (table.testers[f"->{p.signature[1]}"].size, table.testers[f"{p.signature[0]}->"].size)
    a, b = px.stats.reshape(shape(px)), py.stats.reshape(shape(py))
    return np.einsum("ij,kl->ikjl", a, b).ravel()


def check_congruence(table: StatsTable, fragment: GptFragment, class_map: ClassMap, tol: float = DEFAULT_TOL) -> CheckReport:
    """Quotient-then-compose equals compose-then-quotient for every wired procedure."""
    details = []
    for p in table.procedures:
        if p.wiring is None:
            continue
        kind, x_id, y_id = p.wiring
        px, py = table.first(x_id), table.first(y_id)
        if kind == "seq":
            ox = class_object(fragment, class_map.of(px.id, px.context))
            oy = class_object(fragment, class_map.of(py.id, py.context))
            ox_mat = ox.mat if isinstance(ox, GptTransformation) else ox.covec
            oy_vec = oy.mat if isinstance(oy, GptTransformation) else oy.vec
            composed = np.atleast_1d(ox_mat @ oy_vec)
            target = class_object(fragment, class_map.of(p.id, p.context))
            tv = target.mat if isinstance(target, GptTransformation) else getattr(target, "vec", None)
            if tv is None:
                tv = target.covec
            dev = float(np.max(np.abs(composed - tv)))
        elif kind == "par":
            dev = float(np.max(np.abs(_product_stats(table, px, py) - p.stats)))
        else:
            raise QuotientError(f"unknown wiring kind {kind!r}")
        if dev > tol:
            details.append(f"{p.id!r}: composing classes deviates by {dev:.3g}")
    return CheckReport(not details, tuple(details))


# ---------------------------------------------------------------------------
# pulling back a model of the GPT
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperationalModelTable:
    rows: dict[tuple[str, str], np.ndarray]
    classes: dict[tuple[str, str], str]

    def distinct(self) -> int:
        return len({r.tobytes() + str(r.shape).encode() for r in self.rows.values()})


def nc_model_from_gpt_model(class_map: ClassMap, gpt_model, fragment: GptFragment) -> OperationalModelTable:
    """Give every raw procedure the representation of its class.

    Each class is represented once and the same array is shared by all of its
    members, so rows within a class are identical bit for bit.
    """
    from .frames import represent

    cache: dict[str, np.ndarray] = {}
    rows, classes = {}, {}
    for key, lab in class_map.assignment.items():
        if lab not in cache:
            try:
                rep = represent(gpt_model, class_object(fragment, lab))
            except Exception as exc:  # noqa: BLE001 - reported with the class label
                raise QuotientError(f"class {lab!r} has no representation: {exc}") from exc
            rep = np.array(rep)
            rep.setflags(write=False)
            cache[lab] = rep
        rows[key] = cache[lab]
        classes[key] = lab
    return OperationalModelTable(rows, classes)


# ---------------------------------------------------------------------------
# synthetic tables
# ---------------------------------------------------------------------------

def table_from_gpt(
    procedures: Sequence[tuple[str, str, object]],
    tester_effects: Mapping[str, Sequence[tuple[str, GptEffect]]],
    tester_states: Mapping[str, Sequence[tuple[str, GptState]]],
    deterministic_effect_ids: Sequence[str] = (),
    wirings: Mapping[str, tuple] | None = None,
) -> StatsTable:
    """Statistics table of GPT objects on the given local testers.

    ``tester_effects[A]`` test states on ``A``; ``tester_states[A]`` test
    effects on ``A``. Testers are added as procedures (context ``"tester"``)
    unless an object with the same id is already listed.
    """
    wirings = dict(wirings or {})
    testers: dict[str, TesterSet] = {}
    for sid, lst in tester_effects.items():
        testers[f"->{sid}"] = TesterSet(f"->{sid}", tuple(i for i, _ in lst))
    for sid, lst in tester_states.items():
        testers[f"{sid}->"] = TesterSet(f"{sid}->", tuple(i for i, _ in lst))

    def stats_of(obj):
        if isinstance(obj, GptState):
            te = tester_effects[obj.system.id]
            return np.array([e.covec @ obj.vec for _, e in te]), (None, obj.system.id)
        if isinstance(obj, GptEffect):
            ts = tester_states[obj.system.id]
            return np.array([obj.covec @ s.vec for _, s in ts]), (obj.system.id, None)
        if isinstance(obj, GptTransformation):
            a, b = obj.in_system.id, obj.out_system.id
            ts, te = tester_states[a], tester_effects[b]
            key = f"{a}->{b}"
            if key not in testers:
                testers[key] = TesterSet(key, tuple(f"{ei}|{si}" for ei, _ in te for si, _ in ts))
            return np.array([e.covec @ obj.mat @ s.vec for _, e in te for _, s in ts]), (a, b)
        raise QuotientError(f"cannot tabulate {type(obj).__name__}")

    procs = []
    listed: dict[str, np.ndarray] = {}
    for pid, ctx, obj in procedures:
        st, sig = stats_of(obj)
        procs.append(Procedure(pid, ctx, sig, np.clip(st, 0.0, 1.0) if np.all(st > -1e-12) else st, wirings.get(pid)))
        listed.setdefault(pid, st)
    for group_ in (tester_states, tester_effects):
        for sid, lst in group_.items():
            for tid, obj in lst:
                st, sig = stats_of(obj)
                if tid in listed:
                    if listed[tid].shape != st.shape or np.max(np.abs(listed[tid] - st)) > 1e-9:
                        raise QuotientError(f"tester id {tid!r} is also used by a different procedure")
                    continue
                procs.append(Procedure(tid, "tester", sig, np.clip(st, 0.0, 1.0)))
                listed[tid] = st
    return StatsTable(testers, tuple(procs), tuple(deterministic_effect_ids))


def table_from_fragment(fragment: GptFragment, contexts: Sequence[str] = ("",)) -> StatsTable:
    """Table of a fragment on its own states and effects as testers (one row per object and context)."""
    te = {s.id: [(e.label or f"e{i}", e) for i, e in enumerate(fragment.effects_on(s.id))] for s in fragment.systems}
    ts = {s.id: [(st.label or f"s{i}", st) for i, st in enumerate(fragment.states_on(s.id))] for s in fragment.systems}
    te = {k: v for k, v in te.items() if v}
    ts = {k: v for k, v in ts.items() if v}
    procs = []
    for ctx in contexts:
        for i, s in enumerate(fragment.states):
            procs.append((s.label or f"s{i}", ctx, s))
        for i, e in enumerate(fragment.effects):
            procs.append((e.label or f"e{i}", ctx, e))
        for i, t in enumerate(fragment.transformations):
            procs.append((t.label or f"t{i}", ctx, t))
    return table_from_gpt(procs, te, ts)
