import numpy as np
import pytest

from qmparse import (
    Context,
    ContextOp,
    HilbertError,
    LabeledOperator,
    Observable,
    POVM,
    ParseClaim,
    SystemRegistry,
    cnot,
    controlled_phase,
    dynamical_description,
    instrument_isometry,
    pauli_observable,
    pointer_observable,
)
from qmparse.measurement import basis_state

from conftest import MINUS, PLUS, SIGMA_X, SIGMA_Z, ket


def zproj(k):
    return np.outer(ket(k), ket(k).conj())


def test_povm_validation(qubit_pair):
    reg = qubit_pair
    effects = [("0", LabeledOperator.create(zproj(0), ("S",), reg)),
               ("1", LabeledOperator.create(zproj(1), ("S",), reg))]
    p = POVM.create(effects)
    assert p.outcome_labels == ("0", "1")
    assert np.allclose(p.effect("1").matrix, zproj(1))
    with pytest.raises(HilbertError):
        POVM.create(effects[:1])  # does not sum to identity
    with pytest.raises(HilbertError):
        POVM.create(effects + [("2", effects[0][1])])


def test_observable_from_operator_labels(qubit_pair):
    obs = pauli_observable("z", "S", qubit_pair)
    # eigenvalues ascend, so -1 (state |1>) comes first
    assert obs.outcome_labels == ("1", "0")
    assert np.allclose(obs.projector("0").matrix, zproj(0))
    assert np.allclose(obs.projector("1").matrix, zproj(1))


def test_observable_from_projectors_order(qubit_pair):
    reg = qubit_pair
    pairs = [("a", LabeledOperator.create(zproj(0), ("S",), reg)),
             ("b", LabeledOperator.create(zproj(1), ("S",), reg))]
    obs = Observable.from_projectors(pairs, reg)
    assert obs.outcome_labels == ("a", "b")
    # operator eigenvalue i sits on the i-th projector
    assert np.allclose(obs.operator.matrix, zproj(1))
    with pytest.raises(HilbertError):
        Observable.from_projectors(pairs[:1], reg)


def test_context_op_validation(qubit_pair):
    reg = qubit_pair
    with pytest.raises(HilbertError):
        ContextOp(0, "bogus", pauli_observable("z", "S", reg))
    with pytest.raises(HilbertError):
        ContextOp(0, "observable_measurement", cnot("S", "M", reg))
    cols = np.column_stack([np.kron(ket(0), ket(0)), np.kron(ket(1), ket(1))])
    from qmparse import LabeledIsometry
    v = LabeledIsometry.create(cols, ("S",), ("S", "M"), reg)
    with pytest.raises(HilbertError):
        ContextOp(0, "unitary", v)  # proper isometry is not unitary
    op = ContextOp(0, "isometry", v)
    assert op.same_as(ContextOp(0, "isometry", v))
    assert not op.same_as(ContextOp(1, "isometry", v))


def test_context_rejects_duplicate_times(qubit_pair):
    obs = pauli_observable("z", "M", qubit_pair)
    a = ContextOp(1, "observable_measurement", obs)
    with pytest.raises(HilbertError):
        Context.create([a, ContextOp(1, "observable_measurement", obs)])


def test_parse_claim_validation(qubit_pair):
    reg = qubit_pair
    iso = dynamical_description(
        Observable.from_projectors(
            [("0", LabeledOperator.create(zproj(0), ("S",), reg)),
             ("1", LabeledOperator.create(zproj(1), ("S",), reg))], reg),
        "M", reg)
    povm_m = POVM.projective(pauli_observable("z", "M", reg))
    with pytest.raises(HilbertError):
        # POVM must act on the isometry's inputs
        ParseClaim(isometry=iso, povm=povm_m, time=0, context=Context.create([]))
    povm_s = POVM.projective(
        Observable.from_projectors(
            [("0", LabeledOperator.create(zproj(0), ("S",), reg)),
             ("1", LabeledOperator.create(zproj(1), ("S",), reg))], reg))
    claim = ParseClaim(isometry=iso, povm=povm_s, time=0, context=Context.create([]))
    assert claim.timeline()[0].payload is iso


def test_dynamical_description_is_cnot_append(qubit_pair):
    reg = qubit_pair
    obs = Observable.from_projectors(
        [("0", LabeledOperator.create(zproj(0), ("S",), reg)),
         ("1", LabeledOperator.create(zproj(1), ("S",), reg))], reg)
    iso = dynamical_description(obs, "M", reg)
    for k in range(2):
        out = iso.matrix @ ket(k)
        assert np.allclose(out, np.kron(ket(k), ket(k)))


def test_instrument_isometry_with_aux():
    reg = SystemRegistry([("S", 2), ("P", 2), ("X", 2)])
    # two Kraus operators per outcome: a fully depolarizing-style instrument
    m = [("0", 0, zproj(0) / np.sqrt(2)), ("0", 1, zproj(0) / np.sqrt(2)),
         ("1", 0, zproj(1) / np.sqrt(2)), ("1", 1, zproj(1) / np.sqrt(2))]
    iso, order = instrument_isometry(m, ("S",), ("S",), "P", reg, aux="X")
    assert order == ("0", "1")
    assert iso.outputs == ("S", "P", "X")
    assert np.allclose(iso.matrix.conj().T @ iso.matrix, np.eye(2))
    with pytest.raises(HilbertError):
        instrument_isometry([("0", 0, zproj(0))], ("S",), ("S",), "P", reg)


def test_pointer_observable(qubit_pair):
    obs = pointer_observable("M", ("a", "b"), qubit_pair)
    assert np.allclose(obs.projector("a").matrix, zproj(0))
    with pytest.raises(HilbertError):
        pointer_observable("M", ("a",), qubit_pair)


def test_gates(qubit_pair):
    reg = qubit_pair
    g = cnot("S", "M", reg)
    assert np.allclose(g.matrix @ np.kron(ket(1), ket(0)), np.kron(ket(1), ket(1)))
    cp = controlled_phase("M", "S", reg)
    # control is M (second factor); |-- > on M applies sigma_z to S
    state = np.kron(PLUS, MINUS)
    out = cp.matrix @ state
    assert np.allclose(out, np.kron(MINUS, MINUS))
    s = basis_state("S", 1, reg)
    assert np.allclose(s.vector, ket(1))
