import numpy as np
import pytest

from qmparse import (
    Context,
    ContextOp,
    HilbertError,
    LabeledIsometry,
    LabeledOperator,
    NO_PARSE_CERTIFIED,
    NO_PARSE_HEURISTIC,
    Observable,
    PARSED,
    POVM,
    ParseClaim,
    SystemRegistry,
    commutant_basis,
    decide_parse,
    find_record_observable,
    pauli_observable,
    verify_parse,
)
from qmparse.parse import (
    commutes_with_record,
    post_ops,
    pullback,
    timeline_frames,
    verify_condition1,
)

from conftest import MINUS, PLUS, SIGMA_X, SIGMA_Z, haar_unitary, ket


def zproj(k):
    return np.outer(ket(k), ket(k).conj())


def z_basis_obs(label, reg):
    return Observable.from_projectors(
        [("0", LabeledOperator.create(zproj(0), (label,), reg)),
         ("1", LabeledOperator.create(zproj(1), (label,), reg))], reg)


def copy_iso(src, dst, reg):
    cols = np.column_stack([np.kron(ket(0), ket(0)), np.kron(ket(1), ket(1))])
    return LabeledIsometry.create(cols, (src,), (src, dst), reg)


def friend_claim(reg, context_ops, candidate=None, name="friend"):
    iso = copy_iso("S", "M", reg)
    povm = POVM.projective(z_basis_obs("S", reg))
    return ParseClaim(isometry=iso, povm=povm, time=0,
                      context=Context.create(context_ops),
                      candidate_record=candidate, name=name)


def meas(time, axis, label, reg):
    return ContextOp(time, "observable_measurement", pauli_observable(axis, label, reg))


# ---------------------------------------------------------------------------
# pullback and condition 1


def test_pullback_pointer_readout(qubit_pair):
    reg = qubit_pair
    v = copy_iso("S", "M", reg)
    p = LabeledOperator.create(zproj(0), ("M",), reg)
    assert np.allclose(pullback(v, p, reg).matrix, zproj(0))


def test_pullback_plus_plus(qubit_pair):
    reg = qubit_pair
    v = copy_iso("S", "M", reg)
    pp = np.kron(PLUS, PLUS)
    p = LabeledOperator.create(np.outer(pp, pp.conj()), ("S", "M"), reg)
    expected = 0.5 * np.outer(PLUS, PLUS.conj())
    assert np.allclose(pullback(v, p, reg).matrix, expected)


def test_pullback_lab_superposition_basis():
    # copying S into a lab (memory + environment); pulling back the projector
    # onto (|lab_0> + |lab_1>)/sqrt(2) gives half the |+><+| projector
    reg = SystemRegistry([("S", 2), ("B", 2), ("Bbar", 2)])
    labs = [np.kron(np.kron(ket(k), ket(k)), ket(k)) for k in range(2)]
    v = LabeledIsometry.create(np.column_stack(labs), ("S",), ("S", "B", "Bbar"), reg)
    lab_plus = (labs[0] + labs[1]) / np.sqrt(2)
    p = LabeledOperator.create(np.outer(lab_plus, lab_plus.conj()),
                               ("S", "B", "Bbar"), reg)
    pb = pullback(v, p, reg).matrix
    # <lab_k|lab_+> = 1/sqrt(2), so every entry is 1/2: exactly |+><+|
    assert np.allclose(pb, np.outer(PLUS, PLUS.conj()))
    assert np.isclose((labs[0].conj() @ lab_plus) * (lab_plus.conj() @ labs[0]), 0.5)


def test_pullback_preserves_hermiticity(rng, qubit_pair):
    v = copy_iso("S", "M", qubit_pair)
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = h + h.conj().T
    p = LabeledOperator.create(h, ("S", "M"), qubit_pair)
    out = pullback(v, p, qubit_pair).matrix
    assert np.allclose(out, out.conj().T)


def test_condition1_known_records(qubit_pair):
    reg = qubit_pair
    v = copy_iso("S", "M", reg)
    povm = POVM.projective(z_basis_obs("S", reg))
    ok, _ = verify_condition1(v, povm, z_basis_obs("M", reg), reg)
    assert ok
    ok, _ = verify_condition1(v, povm, z_basis_obs("S", reg), reg)
    assert ok
    x_record = Observable.from_projectors(
        [("0", LabeledOperator.create(np.outer(PLUS, PLUS.conj()), ("M",), reg)),
         ("1", LabeledOperator.create(np.outer(MINUS, MINUS.conj()), ("M",), reg))], reg)
    ok, res = verify_condition1(v, povm, x_record, reg)
    assert not ok
    assert max(res.values()) > 0.1


def test_condition1_operator_vs_state_paths_agree(rng):
    # the operator identity and the randomized-state trace identity must
    # agree on random (V, P) pairs, whether or not the pair satisfies it
    reg = SystemRegistry([("S", 2), ("M", 2)])
    agreements = 0
    for trial in range(100):
        u = haar_unitary(4, rng)
        v = LabeledIsometry.create(u[:, :2], ("S",), ("S", "M"), reg)
        p0 = rng.random()
        effects = [("0", LabeledOperator.create(p0 * np.eye(2), ("S",), reg)),
                   ("1", LabeledOperator.create((1 - p0) * np.eye(2), ("S",), reg))]
        povm = POVM.create(effects)
        q = haar_unitary(4, rng)
        proj = q[:, :2] @ q[:, :2].conj().T
        record = Observable.from_projectors(
            [("0", LabeledOperator.create(proj, ("S", "M"), reg)),
             ("1", LabeledOperator.create(np.eye(4) - proj, ("S", "M"), reg))], reg)
        ok, res = verify_condition1(v, povm, record, reg, rng=rng)
        operator_path = max(val for key, val in res.items() if key.startswith("outcome"))
        state_path = res["state_check"]
        # both paths flag the same pairs (state path bounded by operator path)
        assert state_path <= operator_path + 1e-9
        if operator_path <= 1e-9:
            assert state_path <= 1e-9
            agreements += 1
    assert agreements < 100  # random pairs mostly violate the identity


# ---------------------------------------------------------------------------
# condition 2


def test_post_ops_strictly_after(qubit_pair):
    ops = [meas(1, "z", "M", qubit_pair), meas(3, "x", "S", qubit_pair)]
    ctx = Context.create(ops)
    assert [o.time for o in post_ops(ctx, 1)] == [3]
    assert [o.time for o in post_ops(ctx, 0)] == [1, 3]


def test_commutes_with_record_cases(qubit_pair):
    reg = qubit_pair
    record = z_basis_obs("M", reg)
    ok, _ = commutes_with_record(meas(1, "x", "S", reg), record, reg, ("S", "M"))
    assert ok  # disjoint supports
    ok, _ = commutes_with_record(meas(1, "z", "M", reg), record, reg, ("S", "M"))
    assert ok
    ok, res = commutes_with_record(meas(1, "x", "M", reg), record, reg, ("S", "M"))
    assert not ok and res > 0.1


def test_commutes_with_record_isometry_persistent_labels():
    reg = SystemRegistry([("S", 2), ("M", 2), ("E", 2)])
    record = z_basis_obs("M", reg)
    grow = copy_iso("M", "E", reg)  # copies M into a fresh system
    op = ContextOp(1, "isometry", grow)
    ok, _ = commutes_with_record(op, record, reg, ("S", "M"), ("S", "M", "E"))
    assert ok
    # an isometry reading M in the x basis disturbs the record
    cols = np.column_stack([np.kron(PLUS, ket(0)), np.kron(MINUS, ket(1))])
    xread = LabeledIsometry.create(cols, ("M",), ("M", "E"), reg)
    ok, _ = commutes_with_record(ContextOp(1, "isometry", xread), record, reg,
                                 ("S", "M"), ("S", "M", "E"))
    assert not ok


def test_timeline_frames_validation(qubit_pair):
    reg = qubit_pair
    v = copy_iso("S", "M", reg)
    frames = timeline_frames([ContextOp(0, "isometry", v), meas(1, "z", "M", reg)], reg)
    assert frames[0].alive_in == ("S",)
    assert frames[0].alive_out == ("S", "M")
    with pytest.raises(HilbertError):
        # M is used before it is created
        timeline_frames([meas(0, "z", "M", reg), ContextOp(1, "isometry", v)], reg)


# ---------------------------------------------------------------------------
# verify_parse


def test_verify_parse_happy_path(qubit_pair):
    claim = friend_claim(qubit_pair, [meas(1, "z", "M", qubit_pair)],
                         candidate=z_basis_obs("M", qubit_pair))
    verdict = verify_parse(claim, qubit_pair)
    assert verdict.status == PARSED
    assert max(verdict.residuals.values()) <= 1e-12


def test_verify_parse_condition2_failure_names_witness(qubit_pair):
    claim = friend_claim(qubit_pair, [meas(1, "x", "M", qubit_pair)],
                         candidate=z_basis_obs("M", qubit_pair))
    verdict = verify_parse(claim, qubit_pair)
    assert verdict.status == NO_PARSE_HEURISTIC
    assert verdict.failed_condition == "Condition2"
    assert verdict.witness["time"] == 1


def test_verify_parse_condition1_failure(qubit_pair):
    reg = qubit_pair
    x_record = Observable.from_projectors(
        [("0", LabeledOperator.create(np.outer(PLUS, PLUS.conj()), ("M",), reg)),
         ("1", LabeledOperator.create(np.outer(MINUS, MINUS.conj()), ("M",), reg))], reg)
    claim = friend_claim(reg, [], candidate=x_record)
    verdict = verify_parse(claim, reg)
    assert verdict.status == NO_PARSE_HEURISTIC
    assert verdict.failed_condition == "Condition1"


# ---------------------------------------------------------------------------
# commutant


def test_commutant_basis_examples(rng):
    reg2 = SystemRegistry([("A", 2), ("B", 2)])
    gens = [LabeledOperator.create(SIGMA_X, ("A",), reg2),
            LabeledOperator.create(SIGMA_X, ("B",), reg2)]
    basis = commutant_basis(gens, ("A", "B"), reg2)
    assert len(basis) == 4
    for b in basis:
        for g in gens:
            big = np.kron(g.matrix, np.eye(2)) if g.acts_on == ("A",) else np.kron(np.eye(2), g.matrix)
            assert np.linalg.norm(big @ b.matrix - b.matrix @ big) <= 1e-10

    reg3 = SystemRegistry([("A", 3)])
    assert len(commutant_basis([], ("A",), reg3)) == 9

    # a generating set of the full matrix algebra leaves only scalars
    full = [LabeledOperator.create(SIGMA_X, ("A",), reg2),
            LabeledOperator.create(SIGMA_Z, ("A",), reg2)]
    basis = commutant_basis(full, ("A",), reg2)
    assert len(basis) == 1
    assert np.allclose(basis[0].matrix,
                       (np.trace(basis[0].matrix) / 2) * np.eye(2))


def test_commutant_basis_orthonormal(rng):
    reg = SystemRegistry([("A", 2), ("B", 2)])
    u = haar_unitary(4, rng)
    gens = [LabeledOperator.create(u, ("A", "B"), reg)]
    basis = commutant_basis(gens, ("A", "B"), reg)
    flat = np.column_stack([b.matrix.reshape(-1) for b in basis])
    gram = flat.conj().T @ flat
    assert np.allclose(gram, np.eye(len(basis)), atol=1e-10)


# ---------------------------------------------------------------------------
# layered search


def test_search_l1_certificate_is_recheckable(qubit_pair):
    reg = qubit_pair
    claim = friend_claim(reg, [meas(1, "x", "S", reg), meas(2, "x", "M", reg)])
    verdict = find_record_observable(claim, reg)
    assert verdict.status == NO_PARSE_CERTIFIED
    assert verdict.failed_condition == "Linear-Feasibility"
    w = verdict.witness
    assert w["kind"] == "linear_infeasible"
    sol, _, _, _ = np.linalg.lstsq(w["matrix"], w["rhs"], rcond=None)
    assert np.linalg.norm(w["matrix"] @ sol - w["rhs"]) > 1e-7


def test_search_l2_exact(qubit_pair):
    reg = qubit_pair
    claim = friend_claim(reg, [meas(1, "x", "S", reg), meas(2, "z", "M", reg)])
    verdict = find_record_observable(claim, reg)
    assert verdict.status == PARSED
    assert verdict.residuals["layer"] == "L2"
    expected = np.kron(np.eye(2), zproj(0))
    assert np.allclose(verdict.record.projector("0").matrix, expected, atol=1e-9)


def test_search_l3_heuristic(qubit_pair):
    # a single z readout on M leaves a noncommutative commutant, forcing the
    # descent layer; it must still find an exact record
    reg = qubit_pair
    claim = friend_claim(reg, [meas(1, "z", "M", reg)])
    verdict = find_record_observable(claim, reg, rng=np.random.default_rng(3))
    assert verdict.status == PARSED
    assert verdict.residuals["layer"] == "L3"
    reverify = verify_parse(claim, reg, record=verdict.record)
    assert reverify.status == PARSED
    assert max(v for v in reverify.residuals.values()) <= 1e-8


def test_found_record_lies_in_commutant_span(qubit_pair):
    reg = qubit_pair
    claim = friend_claim(reg, [meas(1, "x", "S", reg), meas(2, "z", "M", reg)])
    verdict = find_record_observable(claim, reg)
    gens = [np.kron(SIGMA_X, np.eye(2)), np.kron(np.eye(2), SIGMA_Z)]
    basis = commutant_basis(gens, ("S", "M"), reg)
    flat = np.column_stack([b.matrix.reshape(-1) for b in basis])
    for p in verdict.record.projectors:
        v = p.matrix.reshape(-1)
        res = np.linalg.norm(v - flat @ (flat.conj().T @ v))
        assert res <= 1e-8


def test_decide_parse_candidate_then_fallback(qubit_pair):
    reg = qubit_pair
    # candidate that fails condition 2; the search still finds a valid record
    bad_candidate = z_basis_obs("M", reg)
    claim = friend_claim(reg, [meas(1, "x", "M", reg), meas(2, "z", "S", reg)],
                         candidate=bad_candidate)
    verdict = decide_parse(claim, reg)
    assert verdict.status == PARSED
    assert np.allclose(verdict.record.projector("0").matrix,
                       np.kron(zproj(0), np.eye(2)), atol=1e-9)


def test_anti_monotonicity_shrinking_context(qubit_pair):
    reg = qubit_pair
    full_ops = [meas(1, "x", "S", reg), meas(2, "z", "M", reg)]
    verdict = find_record_observable(friend_claim(reg, full_ops), reg)
    assert verdict.status == PARSED
    for drop in range(len(full_ops)):
        smaller = [op for i, op in enumerate(full_ops) if i != drop]
        sub = verify_parse(friend_claim(reg, smaller), reg, record=verdict.record)
        assert sub.status == PARSED
        assert max(sub.residuals.values()) <= 1e-8
