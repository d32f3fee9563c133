import numpy as np
import pytest
from hypothesis import given, strategies as st

from gptforge.errors import FrameError
from gptforge.frames import (
    ProcessRepresentation, QuasiModelReport, Refusal, build_frame, exactness_check, frame_model,
    positivity_report, quasi_to_ontological, represent, sample_square_frame, verify_structure,
)
from gptforge.gptcore import (
    GptEffect, GptFragment, GptState, GptTransformation, classical_system, composite, compose_par, evaluate,
    identity, random_transformation,
)
from gptforge.quantum import (
    eight_state_chi, frame_min_eigenvalue, gross_wigner_frame, hermitian_basis, stabilizer_fragment,
    toy_bit_chi, toy_bit_frame,
)

TETRA = np.array([[1, 1, 1], [-1, -1, 1], [1, -1, -1], [-1, 1, -1]])


def test_classical_bit_frame():
    bit = classical_system(2, "bit")
    e = build_frame(bit, np.eye(2))
    assert np.array_equal(e.dual_frame, np.eye(2)) and np.array_equal(e.frame, np.eye(2))
    assert e.exact and e.n == 2


def test_toy_bit_frame_vectors():
    e = toy_bit_frame()
    # oracle: F_l = (1, s_l) is biorthogonal to D_l = (1, s_l)/4 because s.s' = -1 for distinct vertices
    F = np.hstack([np.ones((4, 1)), TETRA])
    assert np.allclose(toy_bit_chi() @ F.T, np.eye(4))
    assert np.allclose(e.frame, F)
    assert e.normalization_residual < 1e-15


def test_build_frame_errors(pauli):
    system = pauli.system("qubit")
    chi = toy_bit_chi().copy()
    chi[3] = chi[2]
    with pytest.raises(FrameError, match="singular"):
        build_frame(system, chi)
    with pytest.raises(FrameError, match="normalization"):
        build_frame(system, toy_bit_chi() * 1.1)
    with pytest.raises(FrameError, match="allow_overcomplete"):
        build_frame(system, eight_state_chi())
    over = build_frame(system, eight_state_chi(), allow_overcomplete=True)
    assert not over.exact and over.n == 8


def test_represent_examples():
    model = frame_model(toy_bit_frame())
    system = model["qubit"].system
    assert np.allclose(represent(model, identity(system)), np.eye(4), atol=1e-12)
    zero = represent(model, GptState(system, np.array([1.0, 0, 0, 1])))
    assert sorted(zero.tolist()) == [0.0, 0.0, 0.5, 0.5]
    r = 1 / np.sqrt(3)
    # |T> along (1,1,1): inside the positive region of this tetrahedron (see decisions ledger)
    assert represent(model, GptState(system, np.array([1.0, r, r, r]))).min() > 0
    # the Clifford-equivalent magic state along (-1,-1,-1) is forced negative
    neg = represent(model, GptState(system, np.array([1.0, -r, -r, -r])))
    assert neg.min() == pytest.approx((1 - np.sqrt(3)) / 4)
    with pytest.raises(FrameError):
        represent(model, GptState(classical_system(2), np.array([1.0, 0])))


def test_positivity_reports():
    bit = classical_system(2, "bit")
    cf = GptFragment((bit,), [GptState(bit, np.eye(2)[i]) for i in range(2)],
                     [GptEffect(bit, np.eye(2)[i]) for i in range(2)])
    assert positivity_report(frame_model(build_frame(bit, np.eye(2))), cf).positive

    model = frame_model(toy_bit_frame())
    full = stabilizer_fragment(2)
    pm = full.prepare_measure()
    rep = positivity_report(model, pm)
    assert rep.positive and rep.quasistochastic and rep.min_entry == pytest.approx(0, abs=1e-15)
    paulis = GptFragment(full.systems, full.states, full.effects,
                         [t for t in full.transformations if t.label in ("X", "Y", "Z")])
    assert positivity_report(model, paulis).positive
    # H and S exchange the tetrahedron with its mirror image
    rep_full = positivity_report(model, full)
    assert not rep_full.positive and rep_full.witness.endswith(("H", "S"))
    assert rep_full.min_entry == pytest.approx(-0.5)

    r = 1 / np.sqrt(3)
    with_t = GptFragment(pm.systems, pm.states + (GptState(pm.systems[0], np.array([1.0, -r, -r, -r]), label="T"),),
                         pm.effects)
    assert not positivity_report(model, with_t).positive


def test_quasi_to_ontological():
    model = frame_model(toy_bit_frame())
    ont = quasi_to_ontological(positivity_report(model, stabilizer_fragment(2).prepare_measure()))
    assert len(ont.states) == 6 and all(np.all(v >= 0) for v in ont.states.values())
    bad = QuasiModelReport(
        (ProcessRepresentation("state", "state[0]:w", np.array([1.08, -0.08]), -0.08, True, 0.0),),
        -0.08, True, False, 1e-9, "state[0]:w",
    )
    ref = quasi_to_ontological(bad)
    assert isinstance(ref, Refusal) and ref.witness == "state[0]:w" and "-0.08" in ref.reason
    empty = quasi_to_ontological(positivity_report(model, GptFragment((model["qubit"].system,))))
    assert empty.states == {} and empty.effects == {} and empty.transformations == {}


def test_verify_structure_examples():
    entry = toy_bit_frame()
    frag = stabilizer_fragment(2)
    v = verify_structure(entry.chi, entry.chi_inv, frag)
    assert v.passed and v.adequacy_residual <= 1e-9 and v.inverse_residual <= 1e-9
    pert = entry.chi_inv.copy()
    pert[1, 2] += 1e-3
    v2 = verify_structure(entry.chi, pert, frag)
    assert not v2.passed and v2.location is not None
    assert v2.inverse_residual == pytest.approx(1e-3)
    with pytest.raises(FrameError):
        verify_structure(entry.chi, entry.chi_inv[:, :3], frag)


def test_exactness_check():
    q = exactness_check(frame_model(toy_bit_frame()), "qubit")
    assert q.passed and q.gamma == 1
    system = toy_bit_frame().system
    eight = exactness_check(frame_model(build_frame(system, eight_state_chi(), allow_overcomplete=True)), "qubit")
    assert not eight.passed and eight.gamma == 2
    trit = classical_system(3, "trit")
    assert exactness_check(frame_model(build_frame(trit, np.eye(3))), trit).passed


def test_composite_frame_is_tensor_product(pauli):
    a = toy_bit_frame()
    _, g = gross_wigner_frame(3)
    qq = composite(a.system, g.system, "qubit*qutrit")
    model = frame_model(a, g, composites=[qq])
    assert np.array_equal(model[qq.id].chi, np.kron(a.chi, g.chi))
    assert model[qq.id].ontic.labels[:2] == ("a,0,0", "a,0,1")
    assert model.composite_registry[qq.id] == ("qubit", "qutrit")


def _random_square_model(seed):
    rng = np.random.default_rng(seed)
    basis = hermitian_basis(2, unit_first=True)
    return rng, sample_square_frame(basis.system("qubit"), rng)


@given(st.integers(0, 10**6))
def test_frame_exactness_and_normalization(seed):
    rng, entry = _random_square_model(seed)
    model = frame_model(entry)
    system = entry.system
    assert np.max(np.abs(represent(model, identity(system)) - np.eye(4))) <= 1e-12
    t = random_transformation(rng, system, system)
    assert np.max(np.abs(represent(model, t).sum(axis=0) - 1)) <= 1e-9
    s = GptState(system, np.array([1.0, *rng.uniform(-0.5, 0.5, 3)]))
    e = GptEffect(system, rng.uniform(-1, 1, 4))
    lhs = evaluate(e, t, s)
    rhs = represent(model, e) @ represent(model, t) @ represent(model, s)
    assert abs(lhs - rhs) <= 1e-9
    assert represent(model, s).sum() == pytest.approx(1.0, abs=1e-9)


@given(st.integers(0, 10**6))
def test_product_rule(seed):
    rng, a = _random_square_model(seed)
    b = build_frame(classical_system(2, "bit"), np.array([[0.75, 0.25], [0.25, 0.75]]))
    ab = composite(a.system, b.system)
    model = frame_model(a, b, composites=[ab])
    t1 = random_transformation(rng, a.system, a.system)
    t2 = random_transformation(rng, b.system, b.system)
    lhs = represent(model, compose_par(t1, t2, [ab]))
    rhs = np.kron(represent(model, t1), represent(model, t2))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1, np.max(np.abs(lhs)))


def test_no_positive_qubit_frame_sampled():
    basis = hermitian_basis(2, unit_first=True)
    rng = np.random.default_rng(7)
    for _ in range(200):
        entry = sample_square_frame(basis.system("qubit"), rng)
        assert frame_min_eigenvalue(entry, basis) < -1e-9
    # the toy-bit frame is a valid frame too, and it has negative operators
    assert frame_min_eigenvalue(toy_bit_frame(), basis) < -1e-9
