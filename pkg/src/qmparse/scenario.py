"""Scenario files: a JSON-compatible description of systems, a timeline,
parse claims, and queries, plus the runner that turns one into a report.

Schema summary (full examples ship with the built-in scenarios):

  systems        [[label, dim], ...]  insertion order fixes tensor order
  initial_state  {"systems": [...], "amplitudes": [[re,im], ...]}
                 or {"name": "max_entangled", "systems": [a, b]}
  timeline       [{"time": t, "kind": "unitary"|"isometry", "op": ISO}
                  | {"time": t, "kind": "observable_measurement",
                     "observable": OBS}, ...]
  claims         [{"name", "time", "povm": POVM, "context_times": [...],
                   "candidate_record": OBS (optional)}, ...]
  queries        [{"type": "parse", "claim": name}
                  | {"type": "joint_parse", "claims": [...]}
                  | {"type": "distribution", "claims": [...], "finals": [...]}
                  | {"type": "conditional", "claims": [...], "finals": [...],
                     "given": [[event, outcome], ...], "query": [[...], ...]}
                  | {"type": "collapse_compare", "claims": [...],
                     "finals": [...], "collapse": name}, ...]

Sub-specs: complex numbers are [re, im] pairs, matrices row-major.

  ISO   {"matrix": M, "inputs": [...], "outputs": [...]}
        | {"gate": "cnot"|"controlled_phase", "control": l, "target": l}
        | {"dynamical": {"observable": OBS, "pointer": l}}
        | {"instrument": {"ops": [{"outcome", "kraus_index", "matrix"}, ...],
           "inputs", "outputs", "pointer", "aux"(opt)}}
  OBS   {"pauli": "x"|"y"|"z", "system": l, "outcomes"(opt)}
        | {"operator": M, "systems": [...], "outcomes"(opt)}
        | {"basis": [{"outcome": k, "vector": v}, ...], "systems": [...],
           "complete_label"(opt): k}
        | {"projectors": [{"outcome": k, "matrix": M}, ...], "systems": [...],
           "complete_label"(opt): k}
        | {"pointer": l, "outcomes": [...]}
  POVM  {"projective": OBS}
        | {"effects": [{"outcome": k, "matrix": M}, ...], "systems": [...]}
  FINAL {"name": n, "time": t}   read the timeline measurement at t
        | {"name": n, "observable": OBS}   fresh terminal measurement
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .context import JointParseReport, joint_parse
from .hilbert import (
    HilbertError,
    LabeledIsometry,
    LabeledOperator,
    PureState,
    SystemRegistry,
    max_entangled,
)
from .inference import (
    FinalMeasurement,
    InferenceUnavailable,
    collapse_oracle,
    conditional,
    joint_distribution,
)
from .measurement import (
    Context,
    ContextOp,
    Observable,
    ParseClaim,
    POVM,
    cnot,
    controlled_phase,
    dynamical_description,
    instrument_isometry,
    pauli_observable,
    pointer_observable,
)
from .parse import decide_parse
from .tolerances import DEFAULT, Tolerances

__all__ = ["ScenarioError", "Scenario", "parse_scenario", "serialize",
           "run_scenario"]

QUERY_TYPES = ("parse", "joint_parse", "distribution", "conditional",
               "collapse_compare")


class ScenarioError(ValueError):
    """Malformed scenario: syntax, unresolved reference, or bad dimensions.
    Messages name the offending field path.
    """


def _err(path: str, msg: str) -> "NoReturn":
    raise ScenarioError(f"{path}: {msg}")


def _get(d: dict, key: str, path: str, typ=None):
    if not isinstance(d, dict):
        _err(path, f"expected an object, got {type(d).__name__}")
    if key not in d:
        _err(path, f"missing required field {key!r}")
    v = d[key]
    if typ is not None and not isinstance(v, typ):
        _err(f"{path}.{key}", f"expected {typ.__name__}, got {type(v).__name__}")
    return v


def _complex(x, path: str) -> complex:
    if (not isinstance(x, (list, tuple)) or len(x) != 2
            or not all(isinstance(c, (int, float)) for c in x)):
        _err(path, f"expected a [re, im] pair, got {x!r}")
    return complex(x[0], x[1])


def _vector(x, path: str) -> np.ndarray:
    if not isinstance(x, list) or not x:
        _err(path, "expected a non-empty list of [re, im] pairs")
    return np.array([_complex(c, f"{path}[{i}]") for i, c in enumerate(x)])


def _matrix(x, path: str) -> np.ndarray:
    if not isinstance(x, list) or not x:
        _err(path, "expected a non-empty list of rows")
    rows = [_vector(r, f"{path}[{i}]") for i, r in enumerate(x)]
    if len({len(r) for r in rows}) != 1:
        _err(path, "rows have unequal lengths")
    return np.vstack(rows)


def _labels(x, registry: SystemRegistry, path: str) -> tuple[str, ...]:
    if not isinstance(x, list) or not all(isinstance(l, str) for l in x):
        _err(path, "expected a list of system labels")
    for l in x:
        if l not in registry:
            _err(path, f"unknown system {l!r}")
    return tuple(x)


# ---------------------------------------------------------------------------
# payload specs


def _observable_spec(spec, registry: SystemRegistry, path: str) -> Observable:
    if not isinstance(spec, dict):
        _err(path, "expected an observable spec object")
    try:
        if "pauli" in spec:
            outcomes = spec.get("outcomes")
            return pauli_observable(spec["pauli"], _get(spec, "system", path, str),
                                    registry, outcomes)
        if "operator" in spec:
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            op = LabeledOperator.create(_matrix(spec["operator"], f"{path}.operator"),
                                        systems, registry)
            return Observable.from_operator(op, spec.get("outcomes"))
        if "basis" in spec:
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            d = registry.space_dim(systems)
            pairs, total = [], np.zeros((d, d), dtype=complex)
            for i, entry in enumerate(spec["basis"]):
                epath = f"{path}.basis[{i}]"
                k = _get(entry, "outcome", epath, str)
                v = _vector(_get(entry, "vector", epath), f"{epath}.vector")
                if len(v) != d:
                    _err(f"{epath}.vector", f"expected length {d}, got {len(v)}")
                n = np.linalg.norm(v)
                if n < 1e-12:
                    _err(f"{epath}.vector", "zero vector")
                p = np.outer(v, v.conj()) / n ** 2
                pairs.append((k, LabeledOperator.create(p, systems, registry)))
                total += p
            if "complete_label" in spec:
                pairs.append((spec["complete_label"],
                              LabeledOperator.create(np.eye(d) - total, systems, registry)))
            return Observable.from_projectors(pairs, registry)
        if "projectors" in spec:
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            d = registry.space_dim(systems)
            pairs, total = [], np.zeros((d, d), dtype=complex)
            for i, entry in enumerate(spec["projectors"]):
                epath = f"{path}.projectors[{i}]"
                k = _get(entry, "outcome", epath, str)
                m = _matrix(_get(entry, "matrix", epath), f"{epath}.matrix")
                pairs.append((k, LabeledOperator.create(m, systems, registry)))
                total += m
            if "complete_label" in spec:
                pairs.append((spec["complete_label"],
                              LabeledOperator.create(np.eye(d) - total, systems, registry)))
            return Observable.from_projectors(pairs, registry)
        if "pointer" in spec:
            return pointer_observable(spec["pointer"],
                                      _get(spec, "outcomes", path, list), registry)
    except HilbertError as e:
        _err(path, str(e))
    _err(path, "unrecognized observable spec "
               "(need pauli | operator | basis | projectors | pointer)")


def _povm_spec(spec, registry: SystemRegistry, path: str) -> POVM:
    if not isinstance(spec, dict):
        _err(path, "expected a POVM spec object")
    try:
        if "projective" in spec:
            return POVM.projective(_observable_spec(spec["projective"], registry,
                                                    f"{path}.projective"))
        if "effects" in spec:
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            pairs = []
            for i, entry in enumerate(spec["effects"]):
                epath = f"{path}.effects[{i}]"
                k = _get(entry, "outcome", epath, str)
                m = _matrix(_get(entry, "matrix", epath), f"{epath}.matrix")
                pairs.append((k, LabeledOperator.create(m, systems, registry)))
            return POVM.create(pairs)
    except ScenarioError:
        raise
    except HilbertError as e:
        _err(path, str(e))
    _err(path, "unrecognized POVM spec (need projective | effects)")


def _isometry_spec(spec, registry: SystemRegistry, path: str) -> LabeledIsometry:
    if not isinstance(spec, dict):
        _err(path, "expected an isometry spec object")
    try:
        if "matrix" in spec:
            inputs = _labels(_get(spec, "inputs", path), registry, f"{path}.inputs")
            outputs = _labels(_get(spec, "outputs", path), registry, f"{path}.outputs")
            return LabeledIsometry.create(_matrix(spec["matrix"], f"{path}.matrix"),
                                          inputs, outputs, registry)
        if "gate" in spec:
            name = spec["gate"]
            control = _get(spec, "control", path, str)
            target = _get(spec, "target", path, str)
            if name == "cnot":
                return cnot(control, target, registry)
            if name == "controlled_phase":
                return controlled_phase(control, target, registry)
            _err(f"{path}.gate", f"unknown gate {name!r}")
        if "dynamical" in spec:
            sub = spec["dynamical"]
            obs = _observable_spec(_get(sub, "observable", f"{path}.dynamical"),
                                   registry, f"{path}.dynamical.observable")
            return dynamical_description(obs, _get(sub, "pointer", f"{path}.dynamical", str),
                                         registry)
        if "instrument" in spec:
            sub = spec["instrument"]
            ipath = f"{path}.instrument"
            ops = []
            for i, entry in enumerate(_get(sub, "ops", ipath, list)):
                epath = f"{ipath}.ops[{i}]"
                ops.append((_get(entry, "outcome", epath, str),
                            int(entry.get("kraus_index", 0)),
                            _matrix(_get(entry, "matrix", epath), f"{epath}.matrix")))
            iso, _ = instrument_isometry(
                ops,
                _labels(_get(sub, "inputs", ipath), registry, f"{ipath}.inputs"),
                _labels(_get(sub, "outputs", ipath), registry, f"{ipath}.outputs"),
                _get(sub, "pointer", ipath, str), registry,
                aux=sub.get("aux"))
            return iso
    except ScenarioError:
        raise
    except HilbertError as e:
        _err(path, str(e))
    _err(path, "unrecognized isometry spec "
               "(need matrix | gate | dynamical | instrument)")


def _initial_spec(spec, registry: SystemRegistry, path: str) -> PureState:
    if not isinstance(spec, dict):
        _err(path, "expected an initial_state object")
    try:
        if spec.get("name") == "max_entangled":
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            if len(systems) != 2:
                _err(f"{path}.systems", "max_entangled needs exactly two systems")
            return max_entangled(systems[0], systems[1], registry)
        if "amplitudes" in spec:
            systems = _labels(_get(spec, "systems", path), registry, f"{path}.systems")
            return PureState.create(_vector(spec["amplitudes"], f"{path}.amplitudes"),
                                    systems, registry)
    except ScenarioError:
        raise
    except HilbertError as e:
        _err(path, str(e))
    _err(path, "unrecognized initial_state (need amplitudes | name=max_entangled)")


# ---------------------------------------------------------------------------
# the scenario object


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully resolved scenario plus the normalized document it came from."""

    doc: dict
    registry: SystemRegistry
    initial_state: PureState
    timeline: tuple[ContextOp, ...]
    claims: tuple[ParseClaim, ...]
    queries: tuple[dict, ...]

    def claim(self, name: str) -> ParseClaim:
        for c in self.claims:
            if c.name == name:
                return c
        raise ScenarioError(f"no claim named {name!r}")

    def timeline_op(self, time: int) -> ContextOp:
        for o in self.timeline:
            if o.time == time:
                return o
        raise ScenarioError(f"no timeline op at time {time}")


def parse_scenario(text) -> Scenario:
    """Parse JSON text (or an already-decoded tree) into a resolved Scenario.

    Syntax errors carry line/column; semantic errors name the field path.
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(
                f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        _err("$", "top level must be an object")

    entries = _get(doc, "systems", "$", list)
    pairs = []
    for i, entry in enumerate(entries):
        if (not isinstance(entry, list) or len(entry) != 2
                or not isinstance(entry[0], str) or not isinstance(entry[1], int)):
            _err(f"$.systems[{i}]", f"expected [label, dim], got {entry!r}")
        pairs.append((entry[0], entry[1]))
    try:
        registry = SystemRegistry(pairs)
    except HilbertError as e:
        _err("$.systems", str(e))

    initial = _initial_spec(_get(doc, "initial_state", "$"), registry,
                            "$.initial_state")

    timeline: list[ContextOp] = []
    for i, entry in enumerate(_get(doc, "timeline", "$", list)):
        path = f"$.timeline[{i}]"
        time = _get(entry, "time", path, int)
        kind = _get(entry, "kind", path, str)
        try:
            if kind == "observable_measurement":
                payload = _observable_spec(_get(entry, "observable", path),
                                           registry, f"{path}.observable")
            elif kind in ("unitary", "isometry"):
                payload = _isometry_spec(_get(entry, "op", path), registry,
                                         f"{path}.op")
            else:
                _err(f"{path}.kind", f"unknown kind {kind!r}")
            timeline.append(ContextOp(time=time, kind=kind, payload=payload))
        except ScenarioError:
            raise
        except HilbertError as e:
            _err(path, str(e))
    times = [o.time for o in timeline]
    if len(set(times)) != len(times):
        _err("$.timeline", f"duplicate time indices {times}")
    by_time = {o.time: o for o in timeline}

    claims: list[ParseClaim] = []
    for i, entry in enumerate(doc.get("claims", [])):
        path = f"$.claims[{i}]"
        name = _get(entry, "name", path, str)
        time = _get(entry, "time", path, int)
        if time not in by_time:
            _err(f"{path}.time", f"no timeline op at time {time}")
        op = by_time[time]
        if op.kind == "observable_measurement":
            _err(f"{path}.time", "claimed op must be a unitary or isometry")
        ctx_ops = []
        for j, t in enumerate(_get(entry, "context_times", path, list)):
            if t not in by_time:
                _err(f"{path}.context_times[{j}]", f"no timeline op at time {t}")
            if t == time:
                _err(f"{path}.context_times[{j}]",
                     "a claim's context cannot include the claimed op itself")
            ctx_ops.append(by_time[t])
        povm = _povm_spec(_get(entry, "povm", path), registry, f"{path}.povm")
        record = None
        if "candidate_record" in entry:
            record = _observable_spec(entry["candidate_record"], registry,
                                      f"{path}.candidate_record")
        try:
            claims.append(ParseClaim(isometry=op.payload, povm=povm, time=time,
                                     context=Context.create(ctx_ops),
                                     candidate_record=record, name=name))
        except HilbertError as e:
            _err(path, str(e))
    names = [c.name for c in claims]
    if len(set(names)) != len(names):
        _err("$.claims", f"duplicate claim names {names}")

    queries: list[dict] = []
    for i, q in enumerate(doc.get("queries", [])):
        path = f"$.queries[{i}]"
        qtype = _get(q, "type", path, str)
        if qtype not in QUERY_TYPES:
            _err(f"{path}.type", f"unknown query type {qtype!r}")
        if qtype == "parse":
            if _get(q, "claim", path, str) not in names:
                _err(f"{path}.claim", f"unknown claim {q['claim']!r}")
        else:
            for j, n in enumerate(_get(q, "claims", path, list)):
                if n not in names:
                    _err(f"{path}.claims[{j}]", f"unknown claim {n!r}")
        if qtype in ("distribution", "conditional", "collapse_compare"):
            for j, f in enumerate(q.get("finals", [])):
                fpath = f"{path}.finals[{j}]"
                _get(f, "name", fpath, str)
                if "time" in f:
                    t = f["time"]
                    if t not in by_time:
                        _err(f"{fpath}.time", f"no timeline op at time {t}")
                    if ("observable" not in f
                            and by_time[t].kind != "observable_measurement"):
                        _err(f"{fpath}.time",
                             "a final naming a non-measurement op must supply "
                             "its own observable")
                if "observable" in f:
                    _observable_spec(f["observable"], registry, f"{fpath}.observable")
                elif "time" not in f:
                    _err(fpath, "final needs either time or observable")
        if qtype == "collapse_compare":
            if _get(q, "collapse", path, str) not in q.get("claims", []):
                _err(f"{path}.collapse", "collapse claim must be in the query's claims")
        if qtype == "conditional":
            _get(q, "given", path, list)
            _get(q, "query", path, list)
        queries.append(q)

    return Scenario(doc=doc, registry=registry, initial_state=initial,
                    timeline=tuple(timeline), claims=tuple(claims),
                    queries=tuple(queries))


def serialize(scenario: Scenario) -> str:
    """Canonical JSON for a scenario; parse_scenario(serialize(s)) rebuilds
    an equal document.
    """
    return json.dumps(scenario.doc, indent=2)


# ---------------------------------------------------------------------------
# running


def _ser_matrix(m: np.ndarray) -> list:
    return [[[float(c.real), float(c.imag)] for c in row] for row in m]


def _ser_record(record: Optional[Observable]) -> Optional[dict]:
    if record is None:
        return None
    return {"systems": list(record.acts_on),
            "outcomes": list(record.outcome_labels),
            "projectors": [_ser_matrix(p.matrix) for p in record.projectors]}


def _ser_witness(witness: Optional[dict]) -> Optional[dict]:
    if witness is None:
        return None
    out = {}
    for k, v in witness.items():
        if isinstance(v, np.ndarray):
            out[k] = _ser_matrix(v) if v.ndim == 2 else [float(x) for x in np.real(v)]
        elif isinstance(v, (list, tuple)) and v and isinstance(v[0], np.ndarray):
            out[k] = [_ser_matrix(m) for m in v]
        elif isinstance(v, (int, float, str)) or v is None:
            out[k] = v
        else:
            out[k] = repr(v)
    return out


def _ser_verdict(v) -> dict:
    return {"status": v.status,
            "failed_condition": v.failed_condition,
            "record": _ser_record(v.record),
            "witness": _ser_witness(v.witness),
            "residuals": {k: (val if isinstance(val, str) else float(val))
                          for k, val in v.residuals.items()}}


def _finals_for(scenario: Scenario, q: dict) -> list[FinalMeasurement]:
    finals = []
    for f in q.get("finals", []):
        if "observable" in f:
            obs = _observable_spec(f["observable"], scenario.registry, "$.finals")
        else:
            obs = scenario.timeline_op(f["time"]).payload
        finals.append(FinalMeasurement(name=f["name"], observable=obs,
                                       time=f.get("time")))
    return finals


def _report_for(scenario: Scenario, names: Sequence[str],
                tols: Tolerances, rng) -> JointParseReport:
    """Joint parse of the named claims; with no claims, the whole timeline
    stands in as an accepted empty report so pure-evolution queries work.
    """
    if names:
        return joint_parse([scenario.claim(n) for n in names],
                           scenario.registry, tols, rng)
    return JointParseReport(claims=(), joint_context=Context.create(scenario.timeline),
                            per_claim=(), accepted=True)


def _ser_distribution(dist) -> dict:
    return {"events": [{"name": n, "outcomes": list(ks)} for n, ks in dist.events],
            "table": [{"outcomes": list(key), "p": p}
                      for key, p in dist.table.items()]}


def run_scenario(scenario: Scenario, seed: int = 0,
                 tols: Tolerances = DEFAULT) -> dict:
    """Evaluate every query; the report is deterministic for a fixed
    (scenario, seed, tolerances) triple because each query gets a fresh
    generator seeded the same way.
    """
    results = []
    for q in scenario.queries:
        rng = np.random.default_rng(seed)
        entry = {"query": q}
        try:
            if q["type"] == "parse":
                verdict = decide_parse(scenario.claim(q["claim"]),
                                       scenario.registry, tols, rng)
                entry["verdict"] = _ser_verdict(verdict)
            elif q["type"] == "joint_parse":
                report = _report_for(scenario, q["claims"], tols, rng)
                entry.update(accepted=report.accepted,
                             failing=list(report.failing),
                             per_claim={c.name: _ser_verdict(v)
                                        for c, v in zip(report.claims, report.per_claim)})
            elif q["type"] == "distribution":
                report = _report_for(scenario, q["claims"], tols, rng)
                dist = joint_distribution(report, _finals_for(scenario, q),
                                          scenario.initial_state,
                                          scenario.registry, tols)
                entry["distribution"] = _ser_distribution(dist)
            elif q["type"] == "conditional":
                report = _report_for(scenario, q["claims"], tols, rng)
                dist = joint_distribution(report, _finals_for(scenario, q),
                                          scenario.initial_state,
                                          scenario.registry, tols)
                p, certain = conditional(dist,
                                         [tuple(g) for g in q["given"]],
                                         [tuple(g) for g in q["query"]],
                                         tols.tol_prob)
                entry.update(p=p, certain=certain)
            elif q["type"] == "collapse_compare":
                report = _report_for(scenario, q["claims"], tols, rng)
                finals = _finals_for(scenario, q)
                dist = joint_distribution(report, finals, scenario.initial_state,
                                          scenario.registry, tols)
                alt = collapse_oracle(report, q["collapse"], finals,
                                      scenario.initial_state, scenario.registry,
                                      tols)
                diff = max(abs(alt.table[k] - dist.table[k]) for k in dist.table)
                entry.update(max_difference=diff,
                             agrees=diff <= tols.tol_prob,
                             distribution=_ser_distribution(dist))
        except InferenceUnavailable as e:
            entry.update(error="inference_unavailable", message=str(e))
        results.append(entry)
    return {"engine_version": __version__,
            "seed": seed,
            "tolerances": tols.as_dict(),
            "results": results}
