"""Built-in scenarios: the four Wigner's-friend context variants, the
quantum eraser, and the extended four-agent experiment.

Each builder returns a fully resolved Scenario produced through the JSON
layer, so every builtin doubles as a schema example and round-trips through
serialize/parse_scenario.
"""
from __future__ import annotations

import math

import numpy as np

from .scenario import Scenario, parse_scenario

__all__ = ["BUILTIN_NAMES", "builtin", "wigner_friend_Z", "wigner_friend_XZ",
           "wigner_friend_XX", "wigner_friend_ZX", "quantum_eraser",
           "fr_experiment"]


def _c(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _vec(v) -> list:
    return [_c(z) for z in np.asarray(v, dtype=complex)]


def _mat(m) -> list:
    return [_vec(row) for row in np.asarray(m, dtype=complex)]


def _basis_obs(systems: list[str], outcomes: list[str]) -> dict:
    """Computational-basis observable with one outcome label per basis state."""
    d = len(outcomes)
    return {"systems": systems,
            "basis": [{"outcome": k, "vector": _vec(np.eye(d)[i])}
                      for i, k in enumerate(outcomes)]}


def _friend_doc(context: list[dict], claim_extra: dict,
                initial: dict, extra_systems=(), queries=()) -> dict:
    """Common scaffold: a friend copies S's z basis into memory M at time 0,
    then the given context ops run.
    """
    z_s = _basis_obs(["S"], ["0", "1"])
    return {
        "systems": [["S", 2], ["M", 2], *map(list, extra_systems)],
        "initial_state": initial,
        "timeline": [
            {"time": 0, "kind": "isometry",
             "op": {"dynamical": {"observable": z_s, "pointer": "M"}}},
            *context,
        ],
        "claims": [
            {"name": "friend", "time": 0,
             "povm": {"projective": z_s},
             "context_times": [op["time"] for op in context],
             **claim_extra},
        ],
        "queries": [
            {"type": "parse", "claim": "friend"},
            *queries,
        ],
    }


def wigner_friend_Z() -> Scenario:
    """Friend copies the z basis; the only later operation measures the
    memory in the same basis.  The claim parses with the memory readout as
    record, and the friend's result is certain given the later readout.
    """
    context = [{"time": 1, "kind": "observable_measurement",
                "observable": {"pauli": "z", "system": "M"}}]
    queries = [
        {"type": "joint_parse", "claims": ["friend"]},
        {"type": "distribution", "claims": ["friend"],
         "finals": [{"name": "wigner", "time": 1}]},
        {"type": "conditional", "claims": ["friend"],
         "finals": [{"name": "wigner", "time": 1}],
         "given": [["wigner", "0"]], "query": [["friend", "0"]]},
        {"type": "collapse_compare", "claims": ["friend"], "collapse": "friend",
         "finals": [{"name": "wigner", "time": 1}]},
    ]
    doc = _friend_doc(context,
                      {"candidate_record": _basis_obs(["M"], ["0", "1"])},
                      {"systems": ["S"], "amplitudes": _vec([0.6, 0.8])},
                      queries=queries)
    return parse_scenario(doc)


def wigner_friend_XZ() -> Scenario:
    """Later context: an x measurement on S and a z measurement on M.  No
    candidate record is supplied; the exact search finds the memory readout.
    """
    context = [{"time": 1, "kind": "observable_measurement",
                "observable": {"pauli": "x", "system": "S"}},
               {"time": 2, "kind": "observable_measurement",
                "observable": {"pauli": "z", "system": "M"}}]
    queries = [
        {"type": "collapse_compare", "claims": ["friend"], "collapse": "friend",
         "finals": [{"name": "memory", "time": 2}]},
    ]
    doc = _friend_doc(context, {},
                      {"systems": ["S"], "amplitudes": _vec([0.6, 0.8])},
                      queries=queries)
    return parse_scenario(doc)


def wigner_friend_XX() -> Scenario:
    """Later context: x measurements on both S and M.  No record observable
    exists; the verdict is a certified no-parse with a feasibility witness.
    """
    context = [{"time": 1, "kind": "observable_measurement",
                "observable": {"pauli": "x", "system": "S"}},
               {"time": 2, "kind": "observable_measurement",
                "observable": {"pauli": "x", "system": "M"}}]
    doc = _friend_doc(context, {},
                      {"systems": ["S"], "amplitudes": _vec([0.6, 0.8])})
    return parse_scenario(doc)


def wigner_friend_ZX() -> Scenario:
    """S starts maximally entangled with a bystander E; the later context
    measures z on S and x on M.  The record lives on S (its z basis), and the
    friend's outcome is perfectly correlated with E's z readout.
    """
    context = [{"time": 1, "kind": "observable_measurement",
                "observable": {"pauli": "z", "system": "S"}},
               {"time": 2, "kind": "observable_measurement",
                "observable": {"pauli": "x", "system": "M"}}]
    queries = [
        {"type": "distribution", "claims": ["friend"],
         "finals": [{"name": "wigner", "time": 2},
                    {"name": "bystander",
                     "observable": {"pauli": "z", "system": "E"}}]},
        {"type": "conditional", "claims": ["friend"],
         "finals": [{"name": "bystander",
                     "observable": {"pauli": "z", "system": "E"}}],
         "given": [["friend", "1"]], "query": [["bystander", "1"]]},
        {"type": "collapse_compare", "claims": ["friend"], "collapse": "friend",
         "finals": [{"name": "wigner", "time": 2}]},
    ]
    doc = _friend_doc(context, {},
                      {"name": "max_entangled", "systems": ["S", "E"]},
                      extra_systems=[("E", 2)], queries=queries)
    return parse_scenario(doc)


def quantum_eraser() -> Scenario:
    """The friend's copy is undone: a phase correction controlled on the
    memory's +/- basis restores S, and a final x measurement on S comes out
    deterministic.  The copying no longer parses as a measurement.
    """
    context = [{"time": 1, "kind": "unitary",
                "op": {"gate": "controlled_phase", "control": "M", "target": "S"}},
               {"time": 2, "kind": "observable_measurement",
                "observable": {"pauli": "x", "system": "S"}}]
    amp = 1.0 / math.sqrt(2.0)
    queries = [
        {"type": "distribution", "claims": [],
         "finals": [{"name": "wigner", "time": 2}]},
    ]
    doc = _friend_doc(context, {},
                      {"systems": ["S"], "amplitudes": _vec([amp, amp])},
                      queries=queries)
    return parse_scenario(doc)


# ---------------------------------------------------------------------------
# the four-agent experiment


def _env_state(k: int, theta: float) -> np.ndarray:
    """Environment state recorded alongside memory value k.  env_0 = |0>;
    env_1 = cos(theta)|0> + sin(theta)|1>, so theta = pi/2 recovers the
    orthogonal default and other angles make the env states non-orthogonal.
    """
    if k == 0:
        return np.array([1.0, 0.0], dtype=complex)
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


def _lab_vectors(theta: float) -> list[np.ndarray]:
    """|lab_k> = |k>|k>|env_k> on (source, memory, environment)."""
    out = []
    for k in range(2):
        e = np.zeros(2, dtype=complex)
        e[k] = 1.0
        out.append(np.kron(np.kron(e, e), _env_state(k, theta)))
    return out


def _lab_iso_spec(src: str, mem: str, env: str, theta: float) -> dict:
    labs = _lab_vectors(theta)
    return {"matrix": _mat(np.column_stack(labs)),
            "inputs": [src], "outputs": [src, mem, env]}


def _lab_obs_spec(src: str, mem: str, env: str, theta: float) -> dict:
    """Three-outcome superposition-basis observable (|lab_0> +/- |lab_1>)/sqrt(2)
    on a whole laboratory, completed by the orthocomplement.
    """
    labs = _lab_vectors(theta)
    plus = (labs[0] + labs[1]) / math.sqrt(2.0)
    minus = (labs[0] - labs[1]) / math.sqrt(2.0)
    return {"systems": [src, mem, env],
            "basis": [{"outcome": "+", "vector": _vec(plus)},
                      {"outcome": "-", "vector": _vec(minus)}],
            "complete_label": "perp"}


def fr_experiment(theta: float = math.pi / 2) -> Scenario:
    """Four agents: Alice's lab copies a source qubit R, prepares S from her
    memory, Bob's lab copies S, then Ursula and Wigner measure the two labs
    in their superposition bases (modelled as pointer-writing isometries, so
    both can sit on one timeline).

    `theta` sets the labs' environment states; the default keeps them
    orthogonal and any value leaves all parse verdicts unchanged.
    """
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([0.0, 1.0], dtype=complex)
    # Alice's preparation: memory 0 -> S in |0>, memory 1 -> S in |+>
    prep = np.column_stack([np.kron(e0, e0), np.kron(e1, plus)])

    z_r = _basis_obs(["R"], ["0", "1"])
    z_s = _basis_obs(["S"], ["0", "1"])
    alice_record = _basis_obs(["A"], ["0", "1"])
    bob_record = _basis_obs(["B"], ["0", "1"])
    ursula_obs = _lab_obs_spec("R", "A", "Abar", theta)
    wigner_obs = _lab_obs_spec("S", "B", "Bbar", theta)

    doc = {
        "systems": [["R", 2], ["A", 2], ["Abar", 2],
                    ["S", 2], ["B", 2], ["Bbar", 2],
                    ["Up", 3], ["Wp", 3]],
        "initial_state": {"systems": ["R"],
                          "amplitudes": _vec([math.sqrt(1.0 / 3.0),
                                              math.sqrt(2.0 / 3.0)])},
        "timeline": [
            {"time": 0, "kind": "isometry",
             "op": _lab_iso_spec("R", "A", "Abar", theta)},
            {"time": 1, "kind": "isometry",
             "op": {"matrix": _mat(prep), "inputs": ["A"], "outputs": ["A", "S"]}},
            {"time": 2, "kind": "isometry",
             "op": _lab_iso_spec("S", "B", "Bbar", theta)},
            {"time": 3, "kind": "isometry",
             "op": {"dynamical": {"observable": ursula_obs, "pointer": "Up"}}},
            {"time": 4, "kind": "isometry",
             "op": {"dynamical": {"observable": wigner_obs, "pointer": "Wp"}}},
        ],
        "claims": [
            # Alice, judged with Wigner's measurement in context
            {"name": "alice", "time": 0, "povm": {"projective": z_r},
             "context_times": [1, 2, 4], "candidate_record": alice_record},
            # Alice, judged only against her own preparation step
            {"name": "alice_pair", "time": 0, "povm": {"projective": z_r},
             "context_times": [1], "candidate_record": alice_record},
            # Alice with Ursula's measurement added to her context
            {"name": "alice_with_ursula", "time": 0, "povm": {"projective": z_r},
             "context_times": [1, 2, 3, 4], "candidate_record": alice_record},
            # Bob, judged without Wigner
            {"name": "bob", "time": 2, "povm": {"projective": z_s},
             "context_times": [0, 1], "candidate_record": bob_record},
            # Bob, judged with Wigner's measurement in context
            {"name": "bob_with_wigner", "time": 2, "povm": {"projective": z_s},
             "context_times": [0, 1, 4], "candidate_record": bob_record},
            {"name": "ursula", "time": 3, "povm": {"projective": ursula_obs},
             "context_times": [0, 1, 2, 4],
             "candidate_record": {"pointer": "Up", "outcomes": ["+", "-", "perp"]}},
            {"name": "wigner", "time": 4, "povm": {"projective": wigner_obs},
             "context_times": [0, 1, 2],
             "candidate_record": {"pointer": "Wp", "outcomes": ["+", "-", "perp"]}},
        ],
        "queries": [
            {"type": "parse", "claim": "alice"},
            {"type": "parse", "claim": "bob_with_wigner"},
            {"type": "joint_parse", "claims": ["alice_pair", "bob"]},
            {"type": "joint_parse", "claims": ["alice", "bob_with_wigner", "wigner"]},
            {"type": "parse", "claim": "alice_with_ursula"},
            # Alice's forward inference: her outcome 1 makes Wigner's + certain
            {"type": "conditional", "claims": ["alice"],
             "finals": [{"name": "wigner_final", "time": 4,
                         "observable": wigner_obs}],
             "given": [["alice", "1"]], "query": [["wigner_final", "+"]]},
            # Bob's backward inference about Alice
            {"type": "conditional", "claims": ["alice_pair", "bob"],
             "given": [["bob", "1"]], "query": [["alice_pair", "1"]]},
            # Bob's indirect inference via Wigner is unavailable: his claim
            # does not parse with Wigner in context
            {"type": "conditional", "claims": ["bob_with_wigner"],
             "finals": [{"name": "wigner_final", "time": 4,
                         "observable": wigner_obs}],
             "given": [["bob_with_wigner", "1"]], "query": [["wigner_final", "+"]]},
            {"type": "distribution", "claims": ["ursula", "wigner"]},
            {"type": "collapse_compare", "claims": ["alice", "wigner"],
             "collapse": "alice"},
            {"type": "collapse_compare", "claims": ["alice_pair", "bob"],
             "collapse": "bob"},
            {"type": "collapse_compare", "claims": ["ursula", "wigner"],
             "collapse": "ursula"},
        ],
    }
    return parse_scenario(doc)


BUILTIN_NAMES = ("wigner_friend_Z", "wigner_friend_XZ", "wigner_friend_XX",
                 "wigner_friend_ZX", "quantum_eraser", "fr_experiment")

_BUILDERS = {name: globals()[name] for name in BUILTIN_NAMES}


def builtin(name: str, **kwargs) -> Scenario:
    """Look up a built-in scenario by name."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown builtin {name!r}; "
                         f"choose from {', '.join(BUILTIN_NAMES)}") from None
    return build(**kwargs)
