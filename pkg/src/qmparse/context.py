"""Joint-context handling: several dynamics count as measurements together
only if each one still parses once all contexts (and all claimed isometries)
are pooled into a single timeline.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .hilbert import HilbertError, SystemRegistry, embed
from .measurement import Context, ContextOp, ParseClaim
from .parse import (
    ParseVerdict,
    decide_parse,
    timeline_frames,
)
from .tolerances import DEFAULT, Tolerances

__all__ = ["JointParseReport", "joint_context", "joint_parse"]


@dataclass(frozen=True, eq=False)
class JointParseReport:
    claims: tuple[ParseClaim, ...]
    joint_context: Context
    per_claim: tuple[ParseVerdict, ...]
    accepted: bool

    def verdict_for(self, name: str) -> ParseVerdict:
        for c, v in zip(self.claims, self.per_claim):
            if c.name == name:
                return v
        raise HilbertError(f"no claim named {name!r} in report")

    def claim_named(self, name: str) -> ParseClaim:
        for c in self.claims:
            if c.name == name:
                return c
        raise HilbertError(f"no claim named {name!r} in report")

    @property
    def failing(self) -> tuple[str, ...]:
        return tuple(c.name for c, v in zip(self.claims, self.per_claim) if not v.parsed)


def joint_context(claims: Sequence[ParseClaim]) -> Context:
    """Union of all context ops plus every claimed isometry, de-duplicated by
    time index.  Distinct payloads at one time index are a conflict, never a
    merge.
    """
    by_time: dict[int, ContextOp] = {}
    for claim in claims:
        for op in claim.context.ops + (claim.as_op(),):
            have = by_time.get(op.time)
            if have is None:
                by_time[op.time] = op
            elif not have.same_as(op):
                raise HilbertError(
                    f"timeline conflict: two distinct ops claim time {op.time}")
    return Context.create(tuple(by_time[t] for t in sorted(by_time)))


def joint_parse(claims: Sequence[ParseClaim], registry: SystemRegistry,
                tols: Tolerances = DEFAULT,
                rng: Optional[np.random.Generator] = None) -> JointParseReport:
    """Re-verify every claim against the pooled context (a claimed isometry
    is never part of its own context).  When all claims parse, the pushed-
    forward records must pairwise commute; that is asserted here.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    claims = tuple(claims)
    names = [c.name for c in claims]
    if len(set(names)) != len(names):
        raise HilbertError(f"duplicate claim names {names}")
    joint = joint_context(claims)
    verdicts = []
    for claim in claims:
        ctx = Context.create(tuple(o for o in joint.ops if o.time != claim.time))
        reclaim = ParseClaim(isometry=claim.isometry, povm=claim.povm,
                             time=claim.time, context=ctx,
                             candidate_record=claim.candidate_record,
                             name=claim.name)
        verdicts.append(decide_parse(reclaim, registry, tols, rng))
    accepted = all(v.parsed for v in verdicts)
    if accepted and len(claims) > 1:
        _assert_commuting_records(claims, verdicts, joint, registry, tols)
    return JointParseReport(claims=claims, joint_context=joint,
                            per_claim=tuple(verdicts), accepted=accepted)


def _assert_commuting_records(claims, verdicts, joint: Context,
                              registry: SystemRegistry, tols: Tolerances) -> None:
    # import here: inference depends on context for its public API
    from .inference import expand_measurements, pushforward_projector

    ops, registry_x = expand_measurements(joint.ops, registry)
    frames = timeline_frames(ops, registry_x)
    final = frames[-1].alive_out if frames else ()
    pushed: list[list[np.ndarray]] = []
    for claim, verdict in zip(claims, verdicts):
        projs = []
        for p in verdict.record.projectors:
            projs.append(pushforward_projector(p, claim.time, ops, registry_x).matrix)
        pushed.append(projs)
    for i in range(len(pushed)):
        for j in range(i + 1, len(pushed)):
            for x in pushed[i]:
                for y in pushed[j]:
                    res = float(np.linalg.norm(x @ y - y @ x))
                    if res > 10 * tols.tol_op:
                        raise HilbertError(
                            f"accepted claims {claims[i].name!r} and {claims[j].name!r} "
                            f"have non-commuting pushed records (residual {res:.3e})")
