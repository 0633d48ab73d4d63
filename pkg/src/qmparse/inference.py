"""Outcome inference over jointly parsed measurements: joint Born-rule
distributions from commuting pushed-forward records, conditionals with
certainty flags, and the projection-postulate oracle used to cross-check the
dynamical account.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .hilbert import (
    HilbertError,
    LabeledOperator,
    PureState,
    SystemRegistry,
    embed,
    embed_isometry,
)
from .measurement import ContextOp, Observable, dynamical_description
from .parse import Frame, timeline_frames
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "InferenceUnavailable",
    "NullEventError",
    "FinalMeasurement",
    "JointDistribution",
    "expand_measurements",
    "pushforward_projector",
    "joint_distribution",
    "conditional",
    "collapse_oracle",
]


class InferenceUnavailable(Exception):
    """No Boolean algebra of propositions: the joint parse was rejected, so
    there is no setting in which to carry out the inference.
    """


class NullEventError(ValueError):
    """Conditioning on an event of (numerically) zero probability."""


@dataclass(frozen=True, eq=False)
class FinalMeasurement:
    """A terminal projective measurement, read off the final state.

    `time` optionally names the timeline op this measurement stands for; that
    op is then skipped during evolution instead of being expanded.
    """

    name: str
    observable: Observable
    time: Optional[int] = None


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability table over tuples of outcome labels, one coordinate per
    event source (claims first, then final measurements).
    """

    events: tuple[tuple[str, tuple[str, ...]], ...]
    table: dict[tuple[str, ...], float]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.events)

    def prob(self, assignment: dict[str, str]) -> float:
        """Marginal probability of a partial assignment {event: outcome}."""
        unknown = set(assignment) - set(self.names)
        if unknown:
            raise HilbertError(f"unknown event names {sorted(unknown)}")
        idx = {n: i for i, n in enumerate(self.names)}
        total = 0.0
        for key, p in self.table.items():
            if all(key[idx[n]] == v for n, v in assignment.items()):
                total += p
        return total


def expand_measurements(ops: Sequence[ContextOp], registry: SystemRegistry,
                        skip_times: Sequence[int] = ()) -> tuple[list[ContextOp], SystemRegistry]:
    """Replace statistical measurement entries by their dynamical description
    (a fresh pointer system per measurement), so the whole timeline becomes a
    single isometric evolution.
    """
    out: list[ContextOp] = []
    reg = registry
    for op in sorted(ops, key=lambda o: o.time):
        if op.time in skip_times:
            continue
        if op.kind == "observable_measurement":
            pointer = f"_ptr{op.time}"
            if pointer in reg:
                raise HilbertError(f"pointer label {pointer!r} already registered")
            reg = reg.with_system(pointer, len(op.payload.outcome_labels))
            iso = dynamical_description(op.payload, pointer, reg)
            out.append(ContextOp(time=op.time, kind="isometry", payload=iso))
        else:
            out.append(op)
    return out, reg


def pushforward_projector(p: LabeledOperator, time: int,
                          ops: Sequence[ContextOp], registry: SystemRegistry,
                          initial: Optional[Sequence[str]] = None,
                          tol: float = 1e-8) -> LabeledOperator:
    """Final-time Heisenberg representative of a record projector valid just
    after `time`.

    Record systems persist, so the representative is the same operator
    embedded in the final space.  That is only faithful when every later op O
    intertwines the projector (O X_in = X_out O, the undisturbed-record
    condition); the residual is checked here.  Later ops must be isometric.
    """
    frames = timeline_frames(ops, registry, initial)
    alive = None
    for fr in frames:
        if fr.op.time <= time:
            alive = fr.alive_out
    if alive is None:
        alive = frames[0].alive_in if frames else registry.sort(p.acts_on)
    if set(p.acts_on) - set(alive):
        raise HilbertError(f"projector systems {p.acts_on} not alive after time {time}")
    for fr in frames:
        if fr.op.time <= time:
            continue
        if fr.op.kind == "observable_measurement":
            raise HilbertError("pushforward needs an isometric timeline; "
                               "expand measurements first")
        big = embed_isometry(fr.op.payload, registry, alive)
        x_in = embed(p, registry, alive).matrix
        x_out = embed(p, registry, big.outputs).matrix
        res = float(np.linalg.norm(big.matrix @ x_in - x_out @ big.matrix))
        if res > tol:
            raise HilbertError(
                f"op at time {fr.op.time} disturbs the record "
                f"(intertwining residual {res:.3e}); no Heisenberg representative")
        alive = big.outputs
    return embed(p, registry, alive)


# ---------------------------------------------------------------------------
# distributions


def _prepare(report, finals: Sequence[FinalMeasurement],
             initial_state: PureState, registry: SystemRegistry,
             tols: Tolerances):
    """Common setup: expanded timeline, evolved frames, event projector sets."""
    if not report.accepted:
        raise InferenceUnavailable(
            f"joint parse rejected (failing claims: {', '.join(report.failing) or 'none'}); "
            "no Boolean algebra of outcome propositions exists")
    skip = tuple(f.time for f in finals if f.time is not None)
    ops, reg = expand_measurements(report.joint_context.ops, registry, skip_times=skip)
    frames = timeline_frames(ops, reg, initial=initial_state.acts_on)
    final_alive = frames[-1].alive_out if frames else initial_state.acts_on

    events: list[tuple[str, tuple[str, ...]]] = []
    projector_sets: list[list[np.ndarray]] = []
    claim_time: dict[str, int] = {}
    for claim, verdict in zip(report.claims, report.per_claim):
        events.append((claim.name, verdict.record.outcome_labels))
        projs = [pushforward_projector(p, claim.time, ops, reg,
                                       initial=initial_state.acts_on).matrix
                 for p in verdict.record.projectors]
        projector_sets.append(projs)
        claim_time[claim.name] = claim.time
    for f in finals:
        if set(f.observable.acts_on) - set(final_alive):
            raise HilbertError(
                f"final measurement {f.name!r} acts on {f.observable.acts_on}, "
                f"not all alive at the end ({final_alive})")
        events.append((f.name, f.observable.outcome_labels))
        projector_sets.append([embed(p, reg, final_alive).matrix
                               for p in f.observable.projectors])

    names = [n for n, _ in events]
    if len(set(names)) != len(names):
        raise HilbertError(f"duplicate event names {names}")

    # the commuting-family precondition, asserted on the pushed projectors
    flat = [(i, m) for i, ps in enumerate(projector_sets) for m in ps]
    for (i, x), (j, y) in itertools.combinations(flat, 2):
        if i == j:
            continue
        res = float(np.linalg.norm(x @ y - y @ x))
        if res > 10 * tols.tol_op:
            raise HilbertError(
                f"event projectors for {names[i]!r} and {names[j]!r} do not "
                f"commute (residual {res:.3e}); joint statistics are undefined")
    return ops, reg, frames, events, projector_sets, claim_time


def _evolve(frames: Sequence[Frame], registry: SystemRegistry,
            initial_state: PureState,
            collapse_time: Optional[int] = None,
            collapse_projs: Optional[Sequence[LabeledOperator]] = None):
    """Run the timeline.  Without collapse: one final vector.  With collapse:
    a list of unnormalized branch vectors, one per collapse outcome, with the
    projection applied right after the op at `collapse_time`.
    """
    branches = [initial_state.vector]
    alive = initial_state.acts_on
    done_collapse = collapse_time is None
    for fr in frames:
        big = embed_isometry(fr.op.payload, registry, alive)
        branches = [big.matrix @ v for v in branches]
        alive = big.outputs
        if not done_collapse and fr.op.time == collapse_time:
            mats = [embed(p, registry, alive).matrix for p in collapse_projs]
            branches = [m @ branches[0] for m in mats]
            done_collapse = True
    if not done_collapse:
        raise HilbertError(f"no timeline op at collapse time {collapse_time}")
    return branches, alive


def _table_for(vec: np.ndarray, projector_sets: Sequence[Sequence[np.ndarray]],
               order: Sequence[int]) -> np.ndarray:
    """Probabilities ||prod_i P_i(k_i) psi||^2 for every outcome tuple,
    applying event groups in the given order (irrelevant when commuting).
    """
    shape = tuple(len(ps) for ps in projector_sets)
    out = np.zeros(shape)
    def rec(depth: int, v: np.ndarray, idx: tuple[int, ...]):
        if depth == len(order):
            full = [0] * len(shape)
            for pos, i in zip(order, idx):
                full[pos] = i
            out[tuple(full)] = float(np.real(v.conj() @ v))
            return
        for i, p in enumerate(projector_sets[order[depth]]):
            rec(depth + 1, p @ v, idx + (i,))
    rec(0, vec, ())
    return out


def joint_distribution(report, finals: Sequence[FinalMeasurement],
                       initial_state: PureState, registry: SystemRegistry,
                       tols: Tolerances = DEFAULT) -> JointDistribution:
    """Born-rule joint distribution over all claim records (pushed forward to
    the final space) and final measurements.  Requires an accepted report.
    """
    ops, reg, frames, events, projector_sets, _ = _prepare(
        report, finals, initial_state, registry, tols)
    (final_vec,), _ = _evolve(frames, reg, initial_state)
    n = len(projector_sets)
    table = _table_for(final_vec, projector_sets, list(range(n)))
    check = _table_for(final_vec, projector_sets, list(reversed(range(n))))
    drift = float(np.max(np.abs(table - check)))
    if drift > tols.tol_prob:
        raise HilbertError(f"projector product is order-dependent (drift {drift:.3e})")
    return _finish_table(events, table, tols)


def collapse_oracle(report, collapse_claim: str,
                    finals: Sequence[FinalMeasurement],
                    initial_state: PureState, registry: SystemRegistry,
                    tols: Tolerances = DEFAULT) -> JointDistribution:
    """Same joint distribution, but with the named claim handled by the
    projection postulate: its record projectors are applied at measurement
    time (branch + renormalize, here carried as unnormalized branches) before
    the later operations run.
    """
    ops, reg, frames, events, projector_sets, claim_time = _prepare(
        report, finals, initial_state, registry, tols)
    names = [n for n, _ in events]
    if collapse_claim not in claim_time:
        raise HilbertError(f"no accepted claim named {collapse_claim!r}")
    pos = names.index(collapse_claim)
    record = report.verdict_for(collapse_claim).record
    branches, _ = _evolve(frames, reg, initial_state,
                          collapse_time=claim_time[collapse_claim],
                          collapse_projs=record.projectors)
    rest = [i for i in range(len(projector_sets)) if i != pos]
    shape = tuple(len(ps) for ps in projector_sets)
    table = np.zeros(shape)
    for k, branch in enumerate(branches):
        sub = _table_for(branch, projector_sets, rest)
        # sub already has full shape with axis `pos` fixed at index 0
        idx = [slice(None)] * len(shape)
        idx[pos] = k
        table[tuple(idx)] = np.take(sub, 0, axis=pos)
    return _finish_table(events, table, tols)


def _finish_table(events, table: np.ndarray, tols: Tolerances) -> JointDistribution:
    total = float(table.sum())
    if abs(total - 1.0) > 10 * tols.tol_prob:
        raise HilbertError(f"distribution does not normalize (sum {total!r})")
    if float(table.min()) < -tols.tol_prob:
        raise HilbertError(f"negative probability {float(table.min()):.3e}")
    out: dict[tuple[str, ...], float] = {}
    outcome_lists = [list(ks) for _, ks in events]
    for idx in np.ndindex(table.shape):
        key = tuple(outcome_lists[i][j] for i, j in enumerate(idx))
        out[key] = float(table[idx])
    return JointDistribution(events=tuple(events), table=out)


def conditional(dist: JointDistribution,
                given: Sequence[tuple[str, str]],
                query: Sequence[tuple[str, str]],
                tol_prob: float = DEFAULT.tol_prob) -> tuple[float, bool]:
    """P(query | given) and a certainty flag (|p - 1| <= tol_prob)."""
    p_given = dist.prob(dict(given))
    if p_given <= tol_prob:
        raise NullEventError(f"conditioning on a null event {dict(given)!r} "
                             f"(probability {p_given:.3e})")
    p_both = dist.prob({**dict(given), **dict(query)})
    p = p_both / p_given
    return p, abs(p - 1.0) <= tol_prob
