"""Labeled finite-dimensional Hilbert spaces and the dense linear algebra
underneath everything else.

Subsystems are named, and operators/isometries/states carry the ordered list
of labels they act on.  One global convention avoids permutation bugs: the
registry's insertion order is the canonical tensor order (first entry is the
leftmost, most significant factor), and every object is permuted into that
order on construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .tolerances import DEFAULT

__all__ = [
    "HilbertError",
    "SystemRegistry",
    "LabeledOperator",
    "LabeledIsometry",
    "PureState",
    "CheckResult",
    "embed",
    "embed_isometry",
    "compose_timeline",
    "partial_trace",
    "spectral_resolution",
    "is_isometry",
    "is_unitary",
    "is_projector",
    "is_povm",
    "is_observable",
    "random_pure_state",
    "random_unitary",
    "max_entangled",
]


class HilbertError(ValueError):
    """Label or dimension bookkeeping violation."""


def _as_complex(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    m.setflags(write=False)
    return m


class CheckResult(NamedTuple):
    ok: bool
    residual: float

    def __bool__(self) -> bool:  # allows `if is_projector(p): ...`
        return self.ok


@dataclass(frozen=True)
class SystemRegistry:
    """Ordered collection of (label, dimension) pairs.

    Entry order is the canonical tensor-factor order.
    """

    entries: tuple[tuple[str, int], ...]

    def __init__(self, entries: Iterable[tuple[str, int]]):
        entries = tuple((str(l), int(d)) for l, d in entries)
        seen = set()
        for label, dim in entries:
            if not label:
                raise HilbertError("empty system label")
            if label in seen:
                raise HilbertError(f"duplicate system label {label!r}")
            if dim < 1:
                raise HilbertError(f"dimension of {label!r} must be >= 1, got {dim}")
            seen.add(label)
        object.__setattr__(self, "entries", entries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)

    def __contains__(self, label: str) -> bool:
        return any(l == label for l, _ in self.entries)

    def dim(self, label: str) -> int:
        for l, d in self.entries:
            if l == label:
                return d
        raise HilbertError(f"unknown system label {label!r}")

    def index(self, label: str) -> int:
        for i, (l, _) in enumerate(self.entries):
            if l == label:
                return i
        raise HilbertError(f"unknown system label {label!r}")

    def dims(self, labels: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.dim(l) for l in labels)

    def space_dim(self, labels: Sequence[str]) -> int:
        return int(np.prod(self.dims(labels), dtype=np.int64)) if labels else 1

    def sort(self, labels: Iterable[str]) -> tuple[str, ...]:
        """Canonical (registry) order of `labels`; rejects duplicates."""
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise HilbertError(f"duplicate labels in {labels}")
        return tuple(sorted(labels, key=self.index))

    def with_system(self, label: str, dim: int) -> "SystemRegistry":
        return SystemRegistry(self.entries + ((label, dim),))


def _reorder(matrix: np.ndarray,
             row_dims: Sequence[int], row_perm: Sequence[int],
             col_dims: Sequence[int], col_perm: Sequence[int]) -> np.ndarray:
    """Permute the tensor factors of a matrix.

    `row_perm[i]` is the index (into the current row factor list) of the
    factor that should end up in position i; likewise for columns.
    """
    nr = len(row_dims)
    t = matrix.reshape(tuple(row_dims) + tuple(col_dims))
    axes = list(row_perm) + [nr + p for p in col_perm]
    t = t.transpose(axes)
    return t.reshape(matrix.shape)


def _perm_to(current: Sequence[str], target: Sequence[str]) -> list[int]:
    return [current.index(l) for l in target]


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Square operator acting on an ordered subset of registry systems."""

    matrix: np.ndarray
    acts_on: tuple[str, ...]

    @classmethod
    def create(cls, matrix, labels: Sequence[str], registry: SystemRegistry) -> "LabeledOperator":
        matrix = _as_complex(matrix)
        labels = tuple(labels)
        dims = registry.dims(labels)
        d = int(np.prod(dims, dtype=np.int64)) if labels else 1
        if matrix.shape != (d, d):
            raise HilbertError(
                f"operator on {labels} must be {d}x{d}, got {matrix.shape}")
        canon = registry.sort(labels)
        if canon != labels:
            perm = _perm_to(labels, canon)
            matrix = _as_complex(_reorder(np.asarray(matrix), dims, perm, dims, perm))
        return cls(matrix=matrix, acts_on=canon)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(matrix=_as_complex(self.matrix.conj().T), acts_on=self.acts_on)


@dataclass(frozen=True, eq=False)
class LabeledIsometry:
    """Isometry from the joint space of `inputs` to the joint space of
    `outputs`.  Systems persist: inputs must be a subset of outputs; output
    labels absent from the inputs are fresh systems created by the operation.
    """

    matrix: np.ndarray
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    @classmethod
    def create(cls, matrix, inputs: Sequence[str], outputs: Sequence[str],
               registry: SystemRegistry, tol: float = DEFAULT.tol_op) -> "LabeledIsometry":
        matrix = _as_complex(matrix)
        inputs, outputs = tuple(inputs), tuple(outputs)
        in_dims, out_dims = registry.dims(inputs), registry.dims(outputs)
        d_in = int(np.prod(in_dims, dtype=np.int64)) if inputs else 1
        d_out = int(np.prod(out_dims, dtype=np.int64)) if outputs else 1
        if matrix.shape != (d_out, d_in):
            raise HilbertError(
                f"isometry {inputs}->{outputs} must be {d_out}x{d_in}, got {matrix.shape}")
        missing = [l for l in inputs if l not in outputs]
        if missing:
            raise HilbertError(f"isometry consumes systems {missing}; inputs must persist")
        canon_in, canon_out = registry.sort(inputs), registry.sort(outputs)
        if canon_in != inputs or canon_out != outputs:
            matrix = _as_complex(_reorder(
                np.asarray(matrix),
                out_dims, _perm_to(outputs, canon_out),
                in_dims, _perm_to(inputs, canon_in)))
        res = float(np.linalg.norm(matrix.conj().T @ matrix - np.eye(d_in)))
        if res > tol:
            raise HilbertError(f"matrix is not an isometry (residual {res:.3e} > {tol:.1e})")
        return cls(matrix=matrix, inputs=canon_in, outputs=canon_out)

    @property
    def fresh(self) -> tuple[str, ...]:
        return tuple(l for l in self.outputs if l not in self.inputs)

    def dagger_matrix(self) -> np.ndarray:
        return self.matrix.conj().T


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector on an ordered subset of registry systems.

    Unnormalized input vectors are normalized on construction.
    """

    vector: np.ndarray
    acts_on: tuple[str, ...]

    @classmethod
    def create(cls, vector, labels: Sequence[str], registry: SystemRegistry) -> "PureState":
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        labels = tuple(labels)
        dims = registry.dims(labels)
        d = int(np.prod(dims, dtype=np.int64)) if labels else 1
        if vec.shape != (d,):
            raise HilbertError(f"state on {labels} must have dimension {d}, got {vec.shape}")
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise HilbertError("zero state vector")
        vec = vec / norm
        canon = registry.sort(labels)
        if canon != labels:
            perm = _perm_to(labels, canon)
            vec = vec.reshape(dims).transpose(perm).reshape(-1)
        return cls(vector=_as_complex(vec), acts_on=canon)

    def density(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


# ---------------------------------------------------------------------------
# embedding and composition


def embed(op: LabeledOperator, registry: SystemRegistry,
          target: Optional[Sequence[str]] = None) -> LabeledOperator:
    """Tensor `op` with identities on the remaining systems of `target`
    (default: the full registry), permuted to canonical order.
    """
    target = registry.sort(target if target is not None else registry.labels)
    for l in op.acts_on:
        if l not in target:
            raise HilbertError(f"operator label {l!r} not in target space {target}")
    rest = tuple(l for l in target if l not in op.acts_on)
    d_rest = registry.space_dim(rest)
    big = np.kron(op.matrix, np.eye(d_rest))
    cur = op.acts_on + rest
    dims = registry.dims(cur)
    perm = _perm_to(cur, target)
    big = _reorder(big, dims, perm, dims, perm)
    return LabeledOperator(matrix=_as_complex(big), acts_on=target)


def embed_isometry(iso: LabeledIsometry, registry: SystemRegistry,
                   alive: Sequence[str]) -> LabeledIsometry:
    """Embed `iso` into the space of the currently alive systems.

    `alive` must contain all of the isometry's inputs; the result maps the
    alive space to the alive space extended by the isometry's fresh outputs.
    """
    alive = registry.sort(alive)
    for l in iso.inputs:
        if l not in alive:
            raise HilbertError(f"isometry input {l!r} not alive in {alive}")
    for l in iso.fresh:
        if l in alive:
            raise HilbertError(f"isometry output {l!r} already exists")
    rest = tuple(l for l in alive if l not in iso.inputs)
    d_rest = registry.space_dim(rest)
    big = np.kron(iso.matrix, np.eye(d_rest))
    out_alive = registry.sort(tuple(alive) + iso.fresh)
    cur_rows = iso.outputs + rest
    cur_cols = iso.inputs + rest
    big = _reorder(big,
                   registry.dims(cur_rows), _perm_to(cur_rows, out_alive),
                   registry.dims(cur_cols), _perm_to(cur_cols, alive))
    return LabeledIsometry(matrix=_as_complex(big), inputs=alive, outputs=out_alive)


def infer_initial(ops: Sequence[LabeledIsometry], registry: SystemRegistry) -> tuple[str, ...]:
    """Initial systems of a timeline: every input not created by an earlier op.

    Raises if a label is created twice or used before it is created.
    """
    created: set[str] = set()
    initial: set[str] = set()
    for op in ops:
        for l in op.inputs:
            if l not in created:
                initial.add(l)
        for l in op.fresh:
            if l in created:
                raise HilbertError(f"system {l!r} created twice in timeline")
            if l in initial:
                raise HilbertError(f"system {l!r} used before it is created")
            created.add(l)
    return registry.sort(initial)


def compose_timeline(ops: Sequence[LabeledIsometry], registry: SystemRegistry,
                     initial: Optional[Sequence[str]] = None) -> LabeledIsometry:
    """Ordered product of the embedded ops: one isometry from the initial
    systems to the final systems.
    """
    if initial is None:
        initial = infer_initial(ops, registry)
    alive = registry.sort(initial)
    total = np.eye(registry.space_dim(alive), dtype=complex)
    for op in ops:
        big = embed_isometry(op, registry, alive)
        total = big.matrix @ total
        alive = big.outputs
    return LabeledIsometry(matrix=_as_complex(total),
                           inputs=registry.sort(initial), outputs=alive)


def partial_trace(op: LabeledOperator, keep: Sequence[str],
                  registry: SystemRegistry) -> LabeledOperator:
    """Trace out every factor of `op` not listed in `keep`."""
    keep = registry.sort(keep)
    for l in keep:
        if l not in op.acts_on:
            raise HilbertError(f"cannot keep {l!r}: operator acts on {op.acts_on}")
    dims = registry.dims(op.acts_on)
    n = len(dims)
    t = op.matrix.reshape(tuple(dims) * 2)
    # trace axes from the back so earlier axis numbers stay valid
    for i in reversed(range(n)):
        if op.acts_on[i] not in keep:
            t = np.trace(t, axis1=i, axis2=i + len(t.shape) // 2)
    d = registry.space_dim(keep)
    return LabeledOperator(matrix=_as_complex(t.reshape(d, d)), acts_on=keep)


def spectral_resolution(op: LabeledOperator,
                        cluster_tol: float = DEFAULT.cluster_tol,
                        tol: float = DEFAULT.tol_op) -> list[tuple[float, LabeledOperator]]:
    """Eigenvalue clusters and their spectral projectors, ascending.

    Eigenvalues closer than `cluster_tol` share one projector.
    """
    ok, res = is_observable(op, tol)
    if not ok:
        raise HilbertError(f"spectral_resolution needs a Hermitian operator "
                           f"(residual {res:.3e})")
    vals, vecs = np.linalg.eigh((op.matrix + op.matrix.conj().T) / 2)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[groups[-1][-1]] < cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        v = vecs[:, g]
        proj = v @ v.conj().T
        out.append((float(np.mean(vals[g])),
                    LabeledOperator(matrix=_as_complex(proj), acts_on=op.acts_on)))
    return out


# ---------------------------------------------------------------------------
# checks


def _mat(x) -> np.ndarray:
    if isinstance(x, LabeledOperator):
        return x.matrix
    if isinstance(x, LabeledIsometry):
        return x.matrix
    return np.asarray(x, dtype=complex)


def is_isometry(v, tol: float = DEFAULT.tol_op) -> CheckResult:
    m = _mat(v)
    res = float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[1])))
    return CheckResult(res <= tol, res)


def is_unitary(v, tol: float = DEFAULT.tol_op) -> CheckResult:
    m = _mat(v)
    if m.shape[0] != m.shape[1]:
        return CheckResult(False, float("inf"))
    r1 = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[1]))
    r2 = np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0]))
    res = float(max(r1, r2))
    return CheckResult(res <= tol, res)


def is_observable(op, tol: float = DEFAULT.tol_op) -> CheckResult:
    m = _mat(op)
    res = float(np.linalg.norm(m - m.conj().T))
    return CheckResult(res <= tol, res)


def is_projector(op, tol: float = DEFAULT.tol_op) -> CheckResult:
    m = _mat(op)
    res = float(max(np.linalg.norm(m @ m - m), np.linalg.norm(m - m.conj().T)))
    return CheckResult(res <= tol, res)


def is_povm(effects: Sequence, tol: float = DEFAULT.tol_op) -> CheckResult:
    """Positivity (min eigenvalue >= -tol) and completeness of the effects."""
    mats = [_mat(e) for e in effects]
    d = mats[0].shape[0]
    worst = 0.0
    for m in mats:
        worst = max(worst, float(np.linalg.norm(m - m.conj().T)))
        lam_min = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        worst = max(worst, max(0.0, -lam_min))
    worst = max(worst, float(np.linalg.norm(sum(mats) - np.eye(d))))
    return CheckResult(worst <= tol, worst)


# ---------------------------------------------------------------------------
# random and standard constructors


def random_pure_state(labels: Sequence[str], registry: SystemRegistry,
                      rng: np.random.Generator) -> PureState:
    d = registry.space_dim(registry.sort(labels))
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.create(vec, registry.sort(labels), registry)


def random_unitary(labels: Sequence[str], registry: SystemRegistry,
                   rng: np.random.Generator) -> LabeledIsometry:
    """Haar-ish unitary from QR of a complex Gaussian matrix."""
    labels = registry.sort(labels)
    d = registry.space_dim(labels)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return LabeledIsometry.create(q, labels, labels, registry)


def max_entangled(label_a: str, label_b: str, registry: SystemRegistry) -> PureState:
    da, db = registry.dim(label_a), registry.dim(label_b)
    if da != db:
        raise HilbertError(f"max_entangled needs equal dims, got {da} and {db}")
    vec = np.zeros(da * db, dtype=complex)
    for i in range(da):
        vec[i * db + i] = 1.0
    return PureState.create(vec, (label_a, label_b), registry)
