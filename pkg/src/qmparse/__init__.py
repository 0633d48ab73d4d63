"""Verification engine for when a quantum dynamical description counts as a
measurement: record-observable search and certification, joint-context
re-verification, outcome inference, and a scenario file format with a CLI.
"""

__version__ = "0.1.0"

from .tolerances import DEFAULT, Tolerances
from .hilbert import (
    HilbertError,
    LabeledIsometry,
    LabeledOperator,
    PureState,
    SystemRegistry,
    compose_timeline,
    embed,
    embed_isometry,
    max_entangled,
    partial_trace,
    random_pure_state,
    random_unitary,
    spectral_resolution,
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
from .parse import (
    NO_PARSE_CERTIFIED,
    NO_PARSE_HEURISTIC,
    PARSED,
    ParseVerdict,
    commutant_basis,
    decide_parse,
    find_record_observable,
    verify_parse,
)
from .context import JointParseReport, joint_context, joint_parse
from .inference import (
    FinalMeasurement,
    InferenceUnavailable,
    JointDistribution,
    NullEventError,
    collapse_oracle,
    conditional,
    joint_distribution,
    pushforward_projector,
)
from .scenario import Scenario, ScenarioError, parse_scenario, run_scenario, serialize
from .builtins import BUILTIN_NAMES, builtin

__all__ = [
    "__version__",
    "DEFAULT", "Tolerances",
    "HilbertError", "SystemRegistry", "LabeledOperator", "LabeledIsometry",
    "PureState", "embed", "embed_isometry", "compose_timeline",
    "partial_trace", "spectral_resolution", "max_entangled",
    "random_pure_state", "random_unitary",
    "POVM", "Observable", "ContextOp", "Context", "ParseClaim",
    "instrument_isometry", "dynamical_description", "pointer_observable",
    "cnot", "controlled_phase", "pauli_observable",
    "PARSED", "NO_PARSE_CERTIFIED", "NO_PARSE_HEURISTIC", "ParseVerdict",
    "verify_parse", "decide_parse", "find_record_observable", "commutant_basis",
    "JointParseReport", "joint_context", "joint_parse",
    "InferenceUnavailable", "NullEventError", "FinalMeasurement",
    "JointDistribution", "joint_distribution", "collapse_oracle",
    "conditional", "pushforward_projector",
    "Scenario", "ScenarioError", "parse_scenario", "serialize", "run_scenario",
    "BUILTIN_NAMES", "builtin",
]
