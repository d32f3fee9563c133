import numpy as np
import pytest
from hypothesis import given, strategies as st

from gptforge.errors import CompositeNotRegistered, DimensionMismatch, SystemMismatch
from gptforge.gptcore import (
    GptEffect, GptFragment, GptState, GptTransformation, SystemSpec, classical_system, compose_par, compose_seq,
    composite, evaluate, identity, random_transformation, tensor_effects, tensor_states, validate_fragment,
)
from gptforge.quantum import stabilizer_fragment

from conftest import proj

BIT = classical_system(2, "bit")
NOT = GptTransformation(BIT, BIT, np.array([[0.0, 1.0], [1.0, 0.0]]), True, "not")


def qubit_system():
    return SystemSpec("qubit", 4, np.array([1.0, 0, 0, 0]))


def test_system_invariants():
    with pytest.raises(ValueError):
        SystemSpec("x", 0, np.array([]))
    with pytest.raises(ValueError):
        SystemSpec("x", 2, np.zeros(2))


def test_evaluate_classical_bit():
    e = GptEffect(BIT, np.array([1.0, 0.0]))
    assert evaluate(e, identity(BIT), GptState(BIT, np.array([1.0, 0.0]))) == 1
    assert evaluate(e, identity(BIT), GptState(BIT, np.array([0.0, 1.0]))) == 0


def test_evaluate_qubit_born_rule(pauli, kets):
    q = qubit_system()
    e_plus = GptEffect(q, 0.5 * np.array([1.0, 1, 0, 0]))
    s_i = GptState(q, np.array([1.0, 0, 1, 0]))
    # independent oracle: tr(E rho) on explicit 2x2 matrices
    assert np.trace(proj(kets["+"]) @ proj(kets["i"])).real == pytest.approx(0.5)
    assert evaluate(e_plus, None, s_i) == pytest.approx(0.5)


def test_evaluate_rejects_mismatched_systems():
    with pytest.raises((DimensionMismatch, SystemMismatch)):
        evaluate(GptEffect(BIT, np.array([1.0, 0])), None, GptState(qubit_system(), np.array([1.0, 0, 0, 0])))


def test_compose_seq_examples():
    idb = identity(BIT)
    assert np.array_equal(compose_seq(idb, idb).mat, np.eye(2))
    assert np.array_equal(compose_seq(NOT, NOT).mat, np.eye(2))
    q = qubit_system()
    xpi = GptTransformation(q, q, np.diag([1.0, 1, -1, -1]), True)
    assert np.array_equal(compose_seq(xpi, xpi).mat, np.eye(4))
    assert compose_seq(xpi, GptTransformation(q, q, np.eye(4), False)).channel is False


def test_compose_seq_system_mismatch():
    with pytest.raises(SystemMismatch):
        compose_seq(identity(qubit_system()), NOT)


def test_compose_par_examples():
    bb = composite(BIT, BIT, "bit*bit")
    assert np.array_equal(compose_par(identity(BIT), identity(BIT), [bb]).mat, np.eye(4))
    m = compose_par(NOT, identity(BIT), [bb]).mat
    expected = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            expected[(1 - a) * 2 + b, a * 2 + b] = 1
    assert np.array_equal(m, expected)
    q = qubit_system()
    qq = composite(q, q, "qq")
    assert np.array_equal(compose_par(identity(q), identity(q), [qq]).mat, np.eye(16))


def test_compose_par_requires_registration():
    with pytest.raises(CompositeNotRegistered, match="bit"):
        compose_par(NOT, NOT, [])


def test_validate_classical_bit_clean():
    s = [GptState(BIT, np.eye(2)[i]) for i in range(2)]
    e = [GptEffect(BIT, np.eye(2)[i]) for i in range(2)]
    assert validate_fragment(GptFragment((BIT,), s, e, (NOT,))).violations == ()


def test_validate_reports_effect_overflow():
    f = GptFragment((BIT,), [GptState(BIT, np.array([1.0, 0]))], [GptEffect(BIT, np.array([2.0, 0]))])
    rep = validate_fragment(f)
    assert not rep.ok
    assert any("evaluate=2>1" in v.message for v in rep.violations)
    assert rep.violations[0].magnitude == pytest.approx(1.0)


def test_validate_qubit_stabilizer_clean():
    assert validate_fragment(stabilizer_fragment(2)).violations == ()


def test_validate_flags_non_channel_and_cone():
    bad = GptTransformation(BIT, BIT, np.array([[1.0, 0], [0, 0]]), True)
    f = GptFragment(
        (BIT,), [GptState(BIT, np.array([0.5, 0.5]))], [], (bad,),
        state_cone_rays={"bit": np.array([[1.0, 0.0]])},
    )
    kinds = {v.kind for v in validate_fragment(f).violations}
    assert kinds == {"transformation", "cone"}


def _pair(seed):
    rng = np.random.default_rng(seed)
    a, b = classical_system(2, "a"), SystemSpec("b", 3, np.array([1.0, 0.5, 0.0]))
    return rng, a, b


@given(st.integers(0, 10**6), st.floats(-2, 2), st.floats(-2, 2))
def test_bilinearity_of_sequential_composition(seed, alpha, beta):
    rng, a, b = _pair(seed)
    t = random_transformation(rng, b, b)
    x, y = random_transformation(rng, a, b), random_transformation(rng, a, b)
    comb = x.linear_combination(alpha, y, beta)
    lhs = compose_seq(t, comb).mat
    rhs = alpha * compose_seq(t, x).mat + beta * compose_seq(t, y).mat
    assert np.max(np.abs(lhs - rhs)) <= 1e-9
    s, r = random_transformation(rng, b, b), random_transformation(rng, b, b)
    lhs2 = compose_seq(s.linear_combination(alpha, r, beta), x).mat
    rhs2 = alpha * compose_seq(s, x).mat + beta * compose_seq(r, x).mat
    assert np.max(np.abs(lhs2 - rhs2)) <= 1e-9


@given(st.integers(0, 10**6), st.floats(-2, 2), st.floats(-2, 2))
def test_bilinearity_of_parallel_composition(seed, alpha, beta):
    rng, a, b = _pair(seed)
    ab = composite(a, b)
    t = random_transformation(rng, a, a)
    x, y = random_transformation(rng, b, b), random_transformation(rng, b, b)
    lhs = compose_par(t, x.linear_combination(alpha, y, beta), [ab]).mat
    rhs = alpha * compose_par(t, x, [ab]).mat + beta * compose_par(t, y, [ab]).mat
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@given(st.integers(0, 10**6))
def test_channels_preserve_unit_and_interchange(seed):
    rng, a, b = _pair(seed)
    ab = composite(a, b)
    t1, t2 = random_transformation(rng, a, a), random_transformation(rng, a, a)
    s1, s2 = random_transformation(rng, b, b), random_transformation(rng, b, b)
    for t in (t1, t2, s1, s2):
        assert t.channel_residual() <= 1e-9
    lhs = compose_seq(compose_par(t2, s2, [ab]), compose_par(t1, s1, [ab])).mat
    rhs = compose_par(compose_seq(t2, t1), compose_seq(s2, s1), [ab]).mat
    assert np.max(np.abs(lhs - rhs)) <= 1e-9
    assert compose_par(t1, s1, [ab]).channel_residual() <= 1e-9


def test_tensor_states_and_effects_factorize(rng):
    a, b = classical_system(2, "a"), classical_system(3, "b")
    ab = composite(a, b)
    s = tensor_states(GptState(a, np.array([0.3, 0.7])), GptState(b, np.array([0.2, 0.3, 0.5])), [ab])
    e = tensor_effects(GptEffect(a, np.array([1.0, 0])), GptEffect(b, np.array([0, 1.0, 1.0])), [ab])
    assert float(e.covec @ s.vec) == pytest.approx(0.3 * 0.8)
    assert s.norm == pytest.approx(1.0)


def test_values_are_read_only():
    s = GptState(BIT, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        s.vec[0] = 2.0
