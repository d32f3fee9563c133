"""Named reference models used by the CLI and the test suites."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .frames import build_frame
from .gptcore import GptEffect, GptFragment, GptState, classical_system, identity
from .quantum import (
    clifford_generators, eight_state_chi, gross_wigner_frame, hermitian_basis, stabilizer_fragment,
    symmetric_dim, to_gpt, toy_bit_frame,
)
from .quotient import StatsTable, table_from_fragment


@dataclass(frozen=True, eq=False)
class ZooModel:
    name: str
    description: str
    artefacts: dict = field(default_factory=dict)   # kind ("fragment", "frame", "statstable", "tomloc") -> object
    n_ontic: int | None = None

    @property
    def primary(self):
        return next(iter(self.artefacts.values()))


def classical_simplex(d: int = 3) -> ZooModel:
    s = classical_system(d, f"classical{d}")
    eye = np.eye(d)
    states = [GptState(s, eye[i], True, f"v{i}") for i in range(d)]
    effects = [GptEffect(s, eye[i], f"[{i}]") for i in range(d)]
    frag = GptFragment((s,), states, effects, (identity(s),), {s.id: eye}, {s.id: eye}, f"classical-simplex({d})")
    return ZooModel("classical-simplex", f"{d}-outcome classical system: simplex states, indicator effects",
                    {"fragment": frag}, d)


def qubit_gpt() -> ZooModel:
    basis = hermitian_basis(2, unit_first=True)
    system = basis.system("qubit")
    kets = {
        "0": np.array([1, 0]), "1": np.array([0, 1]),
        "+": np.array([1, 1]) / np.sqrt(2), "i": np.array([1, 1j]) / np.sqrt(2),
    }
    states, effects = [], []
    for name, k in kets.items():
        rho = np.outer(k, k.conj())
        states.append(to_gpt(rho, basis, "state", system, label=name))
        effects.append(to_gpt(rho, basis, "effect", system, label=f"[{name}]"))
        effects.append(to_gpt(np.eye(2) - rho, basis, "effect", system, label=f"[not {name}]"))
    trans = [to_gpt([U], basis, "channel", system, label=n) for n, U in clifford_generators(2).items()]
    frag = GptFragment((system,), states, effects, trans, name="qubit-gpt")
    return ZooModel("qubit-gpt", "qubit in Pauli coordinates with the tomographic set {0,1,+,i}", {"fragment": frag})


def qubit_stabilizer() -> ZooModel:
    frag = stabilizer_fragment(2)
    return ZooModel("qubit-stabilizer", "6 stabilizer states, their effects and H, S, X, Y, Z",
                    {"fragment": frag, "statstable": stabilizer_table(frag)}, 4)


def qutrit_stabilizer() -> ZooModel:
    frag = stabilizer_fragment(3)
    return ZooModel("qutrit-stabilizer", "12 qutrit stabilizer states, their effects and F, S, X, Z",
                    {"fragment": frag, "statstable": stabilizer_table(frag)}, 9)


def gross_wigner() -> ZooModel:
    _, entry = gross_wigner_frame(3)
    return ZooModel("gross-wigner-frame", "Gross phase-point frame for the qutrit (9 points)",
                    {"frame": entry, "fragment": stabilizer_fragment(3)}, 9)


def toy_bit() -> ZooModel:
    return ZooModel("toy-bit-frame", "tetrahedral frame reproducing the toy-bit model on qubit stabilizers",
                    {"frame": toy_bit_frame(), "fragment": stabilizer_fragment(2, transformations=False)}, 4)


def eight_state() -> ZooModel:
    frag = stabilizer_fragment(2, transformations=False)
    entry = build_frame(frag.systems[0], eight_state_chi(), allow_overcomplete=True,
                        labels=[f"{a}{b}{c}" for a in "+-" for b in "+-" for c in "+-"])
    return ZooModel("eight-state-model", "overcomplete 8-state model of the qubit stabilizer fragment",
                    {"frame": entry, "fragment": frag}, 8)


def real_stabilizer_dims() -> ZooModel:
    fixture = {
        "schema": "tomloc.v1",
        "name": "real-qutrit-stabilizer",
        "dim_a": symmetric_dim(3),
        "dim_b": symmetric_dim(3),
        "dim_joint": symmetric_dim(9),
    }
    return ZooModel("real-stabilizer-dims", "dimension fixture of real-amplitude qutrit stabilizer theory",
                    {"tomloc": fixture})


def stabilizer_table(frag: GptFragment, contexts=("ctx-a", "ctx-b")) -> StatsTable:
    """Statistics of a stabilizer fragment with every procedure listed in two contexts."""
    return table_from_fragment(frag, contexts)


ZOO: dict[str, Callable[[], ZooModel]] = {
    "classical-simplex": classical_simplex,
    "qubit-gpt": qubit_gpt,
    "qubit-stabilizer": qubit_stabilizer,
    "qutrit-stabilizer": qutrit_stabilizer,
    "gross-wigner-frame": gross_wigner,
    "toy-bit-frame": toy_bit,
    "eight-state-model": eight_state,
    "real-stabilizer-dims": real_stabilizer_dims,
}


def names() -> list[str]:
    return list(ZOO)


def get(name: str, **kwargs) -> ZooModel:
    base, _, arg = name.partition("(")
    if arg:
        kwargs.setdefault("d", int(arg.rstrip(")")))
    try:
        factory = ZOO[base]
    except KeyError:
        raise KeyError(f"unknown zoo model {name!r}; available: {', '.join(ZOO)}") from None
    return factory(**kwargs)
