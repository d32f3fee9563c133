import numpy as np
import pytest
from hypothesis import given, strategies as st

from gptforge.errors import GptError, SingularMatrixError, SystemMismatch
from gptforge.gptcore import (
    GptEffect, GptState, GptTransformation, SystemSpec, classical_system, compose_par, compose_seq, composite,
    evaluate, identity, random_transformation,
)
from gptforge.quantum import depolarizing_kraus, random_kraus, to_gpt
from gptforge.tomo import (
    SpanningSet, compose_raw, identity_decomposition_check, identity_standard, joint_dimension,
    product_spanning_set, standard_form, tomographic_locality_check, transition_matrix,
)

from conftest import proj, random_spanning

BIT = classical_system(2, "bit")


def qubit_set(pauli, kets, names=("0", "1", "+", "i")):
    system = pauli.system("qubit")
    states = [to_gpt(proj(kets[n]), pauli, "state", system) for n in names]
    effects = [to_gpt(proj(kets[n]), pauli, "effect", system) for n in names]
    return system, states, effects


def test_classical_bit_transition_matrix():
    states = [GptState(BIT, np.eye(2)[i]) for i in range(2)]
    effects = [GptEffect(BIT, np.eye(2)[i]) for i in range(2)]
    tm = transition_matrix(GptTransformation(BIT, BIT, np.array([[0.3, 0.6], [0.7, 0.4]]), True), states, effects)
    assert np.array_equal(tm.basis_in.N1, np.eye(2))
    assert np.allclose(tm.M, tm.raw_N)
    assert identity_decomposition_check(BIT, states, effects).residual == 0


def test_qubit_transition_matrix_of_identity(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    tm = transition_matrix(identity(system), states, effects)
    # oracle: Born-rule overlaps |<psi_k|psi_j>|^2 from the kets
    names = ("0", "1", "+", "i")
    oracle = np.array([[abs(np.vdot(kets[a], kets[b])) ** 2 for b in names] for a in names])
    assert np.allclose(tm.basis_in.N1, oracle, atol=1e-12)
    assert np.allclose(oracle, [[1, 0, .5, .5], [0, 1, .5, .5], [.5, .5, 1, .5], [.5, .5, .5, 1]])
    assert np.max(np.abs(tm.standard - np.eye(4))) < 1e-9
    assert tm.cond > 1


def test_identity_decomposition_qubit(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    res = identity_decomposition_check(system, states, effects)
    assert res.ok and res.residual < 1e-9


def test_rank_deficient_states_are_reported(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    with pytest.raises(SingularMatrixError, match="rank 3 < 4"):
        identity_decomposition_check(system, states[:3], effects[:3])
    with pytest.raises(SingularMatrixError, match="rank 3 < 4"):
        SpanningSet(system, tuple(states[:3] + states[:1]), tuple(effects))


def test_locality_dimension_counts():
    assert tomographic_locality_check(4, 4, 16).tomographically_local
    rebit = tomographic_locality_check(3, 3, 10)
    assert not rebit.tomographically_local and rebit.deficit == 1
    real_qutrit = tomographic_locality_check(6, 6, 45)
    assert not real_qutrit.tomographically_local and real_qutrit.deficit == 9
    with pytest.raises(ValueError):
        tomographic_locality_check(2.5, 2, 5)


def test_joint_dimension_of_product_states(rng):
    a, b = classical_system(2, "a"), classical_system(3, "b")
    vecs = [np.kron(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(3))) for _ in range(20)]
    assert joint_dimension(vecs) == 6


def test_compose_raw_examples(pauli, kets, rng):
    system, states, effects = qubit_set(pauli, kets)
    basis = SpanningSet(system, tuple(states), tuple(effects))
    tid = transition_matrix(identity(system), basis)
    assert np.allclose(compose_raw(tid, tid), tid.M)
    c1 = to_gpt(random_kraus(2, rng), pauli, "channel", system)
    c2 = to_gpt(random_kraus(2, rng), pauli, "channel", system)
    t1, t2 = transition_matrix(c1, basis), transition_matrix(c2, basis)
    direct = transition_matrix(compose_seq(c2, c1), basis)
    assert np.max(np.abs(compose_raw(t2, t1) - direct.M)) <= 1e-9
    bstates = [GptState(BIT, np.eye(2)[i]) for i in range(2)]
    beffects = [GptEffect(BIT, np.eye(2)[i]) for i in range(2)]
    tnot = transition_matrix(GptTransformation(BIT, BIT, np.array([[0.0, 1], [1, 0]]), True), bstates, beffects)
    assert np.allclose(compose_raw(tnot, tnot), np.eye(2))


def test_compose_raw_detects_basis_mismatch(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    b1 = SpanningSet(system, tuple(states), tuple(effects))
    _, s2, e2 = qubit_set(pauli, kets, ("0", "1", "-", "-i"))
    b2 = SpanningSet(system, tuple(s2), tuple(e2))
    t1 = transition_matrix(identity(system), b1)
    t2 = transition_matrix(identity(system), b2)
    with pytest.raises(SystemMismatch, match="basis mismatch"):
        compose_raw(t2, t1)


def test_compose_raw_detects_inconsistent_processes(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    basis = SpanningSet(system, tuple(states), tuple(effects))
    t = transition_matrix(identity(system), basis)
    forged = type(t)(t.raw_N, t.M, t.standard, t.basis_in, t.basis_out,
                     GptTransformation(system, system, np.diag([1.0, 1, 1, -1]), True))
    with pytest.raises(GptError, match="disagree"):
        compose_raw(forged, t)


def test_channels_preserve_normalization_in_standard_form(pauli, kets, rng):
    system, states, effects = qubit_set(pauli, kets)
    basis = SpanningSet(system, tuple(states), tuple(effects))
    ch = standard_form(to_gpt(depolarizing_kraus(2, 0.3), pauli, "channel", system), basis)
    u = basis.standard_system().unit_effect
    for s in states:
        assert abs(u @ ch.mat @ basis.state_coords(s) - 1) <= 1e-9


@given(st.integers(0, 10**6))
def test_standard_form_functor_law(seed):
    rng = np.random.default_rng(seed)
    a = SystemSpec("a", 2, np.array([1.0, 1.0]))
    b = SystemSpec("b", 3, np.array([1.0, 0.0, 0.5]))
    ab = composite(a, b)
    ba = SpanningSet(a, *map(tuple, random_spanning(a, rng)))
    bb = SpanningSet(b, *map(tuple, random_spanning(b, rng)))
    t1, t2 = random_transformation(rng, a, b), random_transformation(rng, b, b)
    s1 = standard_form(t1, ba, bb).mat
    s2 = standard_form(t2, bb).mat
    s21 = standard_form(compose_seq(t2, t1), ba, bb).mat
    assert np.max(np.abs(s21 - s2 @ s1)) <= 1e-9 * max(1, np.max(np.abs(s21)))
    ta, tb = random_transformation(rng, a, a), random_transformation(rng, b, b)
    pab = product_spanning_set(ba, bb, [ab])
    lhs = standard_form(compose_par(ta, tb, [ab]), pab).mat
    rhs = np.kron(standard_form(ta, ba).mat, standard_form(tb, bb).mat)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1, np.max(np.abs(lhs)))


@given(st.integers(0, 10**6))
def test_basis_independence_of_probabilities(seed):
    rng = np.random.default_rng(seed)
    a = SystemSpec("a", 3, np.array([1.0, 0.0, 0.0]))
    t = random_transformation(rng, a, a)
    s = GptState(a, np.array([1.0, *rng.uniform(-1, 1, 2)]))
    e = GptEffect(a, rng.uniform(-1, 1, 3))
    p = evaluate(e, t, s)
    for _ in range(2):
        basis = SpanningSet(a, *map(tuple, random_spanning(a, rng)))
        std = standard_form(t, basis)
        q = basis.to_standard_effect(e).covec @ std.mat @ basis.to_standard_state(s).vec
        assert abs(p - q) <= 1e-9 * max(1, basis.cond)


def test_identity_standard_is_identity(pauli, kets):
    system, states, effects = qubit_set(pauli, kets)
    assert np.allclose(identity_standard(SpanningSet(system, tuple(states), tuple(effects))), np.eye(4))
