"""Measurement-theoretic vocabulary: POVMs, observables, contexts, parse
claims, and the constructors bridging statistical and dynamical descriptions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hilbert import (
    HilbertError,
    LabeledIsometry,
    LabeledOperator,
    PureState,
    SystemRegistry,
    infer_initial,
    is_povm,
    is_unitary,
    spectral_resolution,
)
from .tolerances import DEFAULT

__all__ = [
    "POVM",
    "Observable",
    "ContextOp",
    "Context",
    "ParseClaim",
    "instrument_isometry",
    "dynamical_description",
    "pointer_observable",
    "cnot",
    "controlled_phase",
    "basis_state",
    "plus_minus_states",
    "pauli",
    "pauli_observable",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@dataclass(frozen=True, eq=False)
class POVM:
    """Labeled effects: positive operators on one system set summing to 1."""

    outcomes: tuple[tuple[str, LabeledOperator], ...]

    @classmethod
    def create(cls, outcomes: Sequence[tuple[str, LabeledOperator]],
               tol: float = DEFAULT.tol_op) -> "POVM":
        outcomes = tuple(outcomes)
        if not outcomes:
            raise HilbertError("POVM needs at least one outcome")
        labels = [k for k, _ in outcomes]
        if len(set(labels)) != len(labels):
            raise HilbertError(f"duplicate POVM outcome labels in {labels}")
        space = outcomes[0][1].acts_on
        for _, eff in outcomes:
            if eff.acts_on != space:
                raise HilbertError("all POVM effects must act on the same systems")
        ok, res = is_povm([eff for _, eff in outcomes], tol)
        if not ok:
            raise HilbertError(f"effects are not a POVM (residual {res:.3e})")
        return cls(outcomes=outcomes)

    @property
    def acts_on(self) -> tuple[str, ...]:
        return self.outcomes[0][1].acts_on

    @property
    def outcome_labels(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.outcomes)

    def effect(self, label: str) -> LabeledOperator:
        for k, eff in self.outcomes:
            if k == label:
                return eff
        raise HilbertError(f"no POVM outcome {label!r}")

    @classmethod
    def projective(cls, obs: "Observable", tol: float = DEFAULT.tol_op) -> "POVM":
        return cls.create([(k, p) for k, p in zip(obs.outcome_labels, obs.projectors)], tol)


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator together with its clustered spectral resolution and
    one outcome label per eigenvalue cluster.
    """

    operator: LabeledOperator
    resolution: tuple[tuple[float, LabeledOperator], ...]
    outcome_labels: tuple[str, ...]

    @classmethod
    def from_operator(cls, op: LabeledOperator,
                      outcome_labels: Optional[Sequence[str]] = None,
                      cluster_tol: float = DEFAULT.cluster_tol,
                      tol: float = DEFAULT.tol_op) -> "Observable":
        res = tuple(spectral_resolution(op, cluster_tol, tol))
        if outcome_labels is None:
            outcome_labels = tuple(f"{v:g}" for v, _ in res)
        outcome_labels = tuple(outcome_labels)
        if len(outcome_labels) != len(res):
            raise HilbertError(
                f"{len(res)} eigenvalue clusters but {len(outcome_labels)} outcome labels")
        if len(set(outcome_labels)) != len(outcome_labels):
            raise HilbertError(f"duplicate outcome labels {outcome_labels}")
        return cls(operator=op, resolution=res, outcome_labels=outcome_labels)

    @classmethod
    def from_projectors(cls, pairs: Sequence[tuple[str, LabeledOperator]],
                        registry: SystemRegistry,
                        tol: float = DEFAULT.tol_op) -> "Observable":
        """Observable with eigenvalue i on the i-th projector."""
        labels = [k for k, _ in pairs]
        mats = [p.matrix for _, p in pairs]
        acts = pairs[0][1].acts_on
        total = sum(float(i) * m for i, m in enumerate(mats))
        op = LabeledOperator.create(total, acts, registry)
        ok, res = is_povm(mats, tol)
        if not ok:
            raise HilbertError(f"projectors do not resolve the identity (residual {res:.3e})")
        resolution = tuple(
            (float(i), LabeledOperator.create(m, acts, registry)) for i, m in enumerate(mats))
        return cls(operator=op, resolution=resolution, outcome_labels=tuple(labels))

    @property
    def acts_on(self) -> tuple[str, ...]:
        return self.operator.acts_on

    @property
    def projectors(self) -> tuple[LabeledOperator, ...]:
        return tuple(p for _, p in self.resolution)

    def projector(self, outcome: str) -> LabeledOperator:
        for k, (_, p) in zip(self.outcome_labels, self.resolution):
            if k == outcome:
                return p
        raise HilbertError(f"no outcome {outcome!r} on this observable")


OP_KINDS = ("unitary", "isometry", "observable_measurement")


@dataclass(frozen=True, eq=False)
class ContextOp:
    """One timeline entry: a unitary, a general isometry, or a measurement
    kept in statistical (projector) form.
    """

    time: int
    kind: str
    payload: object  # LabeledIsometry or Observable

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise HilbertError(f"unknown op kind {self.kind!r}")
        if self.kind == "observable_measurement":
            if not isinstance(self.payload, Observable):
                raise HilbertError("observable_measurement payload must be an Observable")
        else:
            if not isinstance(self.payload, LabeledIsometry):
                raise HilbertError(f"{self.kind} payload must be a LabeledIsometry")
            if self.kind == "unitary":
                ok, res = is_unitary(self.payload)
                if not ok:
                    raise HilbertError(f"unitary payload fails VV*=I (residual {res:.3e})")

    def same_as(self, other: "ContextOp") -> bool:
        if self.time != other.time or self.kind != other.kind:
            return False
        a, b = self.payload, other.payload
        if isinstance(a, LabeledIsometry) and isinstance(b, LabeledIsometry):
            return (a.inputs == b.inputs and a.outputs == b.outputs
                    and a.matrix.shape == b.matrix.shape
                    and np.array_equal(a.matrix, b.matrix))
        if isinstance(a, Observable) and isinstance(b, Observable):
            return (a.acts_on == b.acts_on
                    and a.outcome_labels == b.outcome_labels
                    and np.array_equal(a.operator.matrix, b.operator.matrix))
        return False


@dataclass(frozen=True, eq=False)
class Context:
    """Time-ordered operations against which a parse claim is judged."""

    ops: tuple[ContextOp, ...]

    @classmethod
    def create(cls, ops: Sequence[ContextOp]) -> "Context":
        ops = tuple(sorted(ops, key=lambda o: o.time))
        times = [o.time for o in ops]
        if len(set(times)) != len(times):
            raise HilbertError(f"duplicate time indices in context: {times}")
        return cls(ops=ops)

    def at(self, time: int) -> ContextOp:
        for o in self.ops:
            if o.time == time:
                return o
        raise HilbertError(f"no context op at time {time}")


@dataclass(frozen=True, eq=False)
class ParseClaim:
    """Claim that `isometry` (at timeline position `time`) is a dynamical
    description of `povm`, judged within `context`.
    """

    isometry: LabeledIsometry
    povm: POVM
    time: int
    context: Context
    candidate_record: Optional[Observable] = None
    name: str = "claim"

    def __post_init__(self):
        if self.povm.acts_on != self.isometry.inputs:
            raise HilbertError(
                f"POVM acts on {self.povm.acts_on} but isometry inputs are "
                f"{self.isometry.inputs}")
        if any(o.time == self.time for o in self.context.ops):
            raise HilbertError(f"context already has an op at the claim's time {self.time}")
        if self.candidate_record is not None:
            rec = self.candidate_record
            if set(rec.acts_on) - set(self.isometry.outputs):
                raise HilbertError("candidate record must act on the isometry's outputs")
            if set(rec.outcome_labels) != set(self.povm.outcome_labels):
                raise HilbertError(
                    f"record outcomes {rec.outcome_labels} do not match POVM outcomes "
                    f"{self.povm.outcome_labels}")

    def as_op(self) -> ContextOp:
        return ContextOp(time=self.time, kind="isometry", payload=self.isometry)

    def timeline(self) -> tuple[ContextOp, ...]:
        """Context ops plus the claimed isometry, in time order."""
        return tuple(sorted(self.context.ops + (self.as_op(),), key=lambda o: o.time))


# ---------------------------------------------------------------------------
# bridging constructors


def instrument_isometry(measurement_ops: Sequence[tuple[str, int, np.ndarray]],
                        inputs: Sequence[str], outputs: Sequence[str],
                        pointer: str, registry: SystemRegistry,
                        aux: Optional[str] = None,
                        tol: float = DEFAULT.tol_op) -> tuple[LabeledIsometry, tuple[str, ...]]:
    """Isometry sum_{k,l} M(k,l) (x) |k>_pointer (x) |l>_aux for measurement
    operators M(k,l) mapping the `inputs` space to the `outputs` space.

    Outcome order on the pointer follows first appearance in `measurement_ops`.
    Returns the isometry and the ordered outcome labels.
    """
    inputs = registry.sort(inputs)
    outputs = registry.sort(outputs)
    d_in, d_out = registry.space_dim(inputs), registry.space_dim(outputs)
    mats: list[tuple[str, int, np.ndarray]] = []
    outcome_order: list[str] = []
    for k, ell, m in measurement_ops:
        m = np.asarray(m, dtype=complex)
        if m.shape != (d_out, d_in):
            raise HilbertError(
                f"measurement operator for ({k},{ell}) must be {d_out}x{d_in}, got {m.shape}")
        if k not in outcome_order:
            outcome_order.append(k)
        mats.append((str(k), int(ell), m))
    comp = sum(m.conj().T @ m for _, _, m in mats)
    res = float(np.linalg.norm(comp - np.eye(d_in)))
    if res > tol:
        raise HilbertError(f"measurement operators violate completeness (residual {res:.3e})")
    n_k = len(outcome_order)
    if registry.dim(pointer) != n_k:
        raise HilbertError(
            f"pointer {pointer!r} must have dimension {n_k}, has {registry.dim(pointer)}")
    ells = sorted({ell for _, ell, _ in mats})
    n_l = max(ells) + 1 if ells else 1
    use_aux = aux is not None
    if use_aux and registry.dim(aux) != n_l:
        raise HilbertError(f"aux {aux!r} must have dimension {n_l}, has {registry.dim(aux)}")
    if not use_aux and n_l > 1:
        raise HilbertError("multiple Kraus indices need an aux system label")
    d_ptr = n_k * (n_l if use_aux else 1)
    v = np.zeros((d_out * d_ptr, d_in), dtype=complex)
    for k, ell, m in mats:
        ptr = np.zeros(d_ptr, dtype=complex)
        ptr[outcome_order.index(k) * (n_l if use_aux else 1) + (ell if use_aux else 0)] = 1.0
        v += np.kron(m, ptr.reshape(-1, 1))
    out_labels = tuple(outputs) + (pointer,) + ((aux,) if use_aux else ())
    iso = LabeledIsometry.create(v, inputs, out_labels, registry, tol)
    return iso, tuple(outcome_order)


def dynamical_description(obs: Observable, pointer: str,
                          registry: SystemRegistry,
                          tol: float = DEFAULT.tol_op) -> LabeledIsometry:
    """Isometry sum_k P(k) (x) |k>_pointer appending a fresh pointer system
    of dimension equal to the number of outcomes.  For a qubit z observable
    this is exactly the CNOT applied to a fresh ancilla in |0>.
    """
    ops = [(k, 0, p.matrix) for k, p in zip(obs.outcome_labels, obs.projectors)]
    iso, _ = instrument_isometry(ops, obs.acts_on, obs.acts_on, pointer, registry, tol=tol)
    return iso


def pointer_observable(pointer: str, outcome_labels: Sequence[str],
                       registry: SystemRegistry) -> Observable:
    """Computational-basis readout of a pointer system, one projector per
    outcome label in pointer-basis order.
    """
    d = registry.dim(pointer)
    outcome_labels = tuple(outcome_labels)
    if len(outcome_labels) != d:
        raise HilbertError(f"pointer {pointer!r} has dim {d}, got "
                           f"{len(outcome_labels)} outcome labels")
    pairs = []
    for i, k in enumerate(outcome_labels):
        proj = np.zeros((d, d), dtype=complex)
        proj[i, i] = 1.0
        pairs.append((k, LabeledOperator.create(proj, (pointer,), registry)))
    return Observable.from_projectors(pairs, registry)


# ---------------------------------------------------------------------------
# gate library


def cnot(control: str, target: str, registry: SystemRegistry) -> LabeledIsometry:
    """CNOT with the given control, as a unitary on two existing qubits."""
    if registry.dim(control) != 2 or registry.dim(target) != 2:
        raise HilbertError("cnot needs qubit systems")
    m = np.zeros((4, 4), dtype=complex)
    for c in range(2):
        for t in range(2):
            m[2 * c + ((t + c) % 2), 2 * c + t] = 1.0
    return LabeledIsometry.create(m, (control, target), (control, target), registry)


def controlled_phase(control: str, target: str, registry: SystemRegistry) -> LabeledIsometry:
    """Apply sigma_z on `target` conditioned on `control` being |->: the
    eraser's phase-correction gate controlled from the |+/-> basis.
    """
    if registry.dim(control) != 2 or registry.dim(target) != 2:
        raise HilbertError("controlled_phase needs qubit systems")
    plus, minus = plus_minus_states()
    p_plus = np.outer(plus, plus.conj())
    p_minus = np.outer(minus, minus.conj())
    m = np.kron(p_plus, np.eye(2)) + np.kron(p_minus, SIGMA_Z)
    return LabeledIsometry.create(m, (control, target), (control, target), registry)


def basis_state(label: str, index: int, registry: SystemRegistry) -> PureState:
    d = registry.dim(label)
    if not 0 <= index < d:
        raise HilbertError(f"basis index {index} out of range for dim {d}")
    vec = np.zeros(d, dtype=complex)
    vec[index] = 1.0
    return PureState.create(vec, (label,), registry)


def plus_minus_states() -> tuple[np.ndarray, np.ndarray]:
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
    return plus, minus


def pauli(axis: str) -> np.ndarray:
    try:
        return PAULIS[axis]
    except KeyError:
        raise HilbertError(f"unknown Pauli axis {axis!r}") from None


def pauli_observable(axis: str, label: str, registry: SystemRegistry,
                     outcome_labels: Optional[Sequence[str]] = None) -> Observable:
    """Single-qubit Pauli measurement; outcomes default to the conventional
    basis names ("0"/"1" for z, "+"/"-" for x).
    """
    if registry.dim(label) != 2:
        raise HilbertError(f"pauli observable needs a qubit, {label!r} has dim {registry.dim(label)}")
    op = LabeledOperator.create(pauli(axis), (label,), registry)
    if outcome_labels is None:
        # eigh orders eigenvalues ascending: -1 first
        outcome_labels = {"z": ("1", "0"), "x": ("-", "+"), "y": ("-i", "+i")}[axis]
    return Observable.from_operator(op, outcome_labels)
