"""FSM safety analysis for gate-level netlists under single event upsets."""

__version__ = "0.1.0"

from .bench import BitVector, FlipFlop, Gate, Net, Netlist, evaluate_cycle, parse_bench, validate
from .encoding import (
    AbstractFsm,
    CorrectorSpec,
    EncodingTable,
    extract_abstract,
    gen_encoding,
    make_corrector,
    min_distance,
    parse_encoding_table,
    reencode,
    write_encoding_table,
)
from .export import to_dot, to_graphml, to_json
from .extraction import (
    FsmCandidate,
    build_register_graph,
    cluster_registers,
    extract_candidate,
    feedback_groups,
)
from .reach import (
    ReachQuery,
    WitnessStep,
    WitnessTrace,
    check_reachable,
    check_reachable_backward,
    replay_witness,
)
from .seu import ExposureReport, SeuOutcome, SeuReport, inject_all, output_corruption
from .stg import (
    IllegalLoop,
    StateClass,
    Stg,
    classify_states,
    compute_legal_set,
    enumerate_stg,
    report_illegal_loops,
    set_legal_override,
    stg_from_edges,
)
from .synth import emit_bench, emit_vectors, synthesize_netlist

__all__ = [
    "AbstractFsm",
    "BitVector",
    "CorrectorSpec",
    "EncodingTable",
    "ExposureReport",
    "FlipFlop",
    "FsmCandidate",
    "Gate",
    "IllegalLoop",
    "Net",
    "Netlist",
    "ReachQuery",
    "SeuOutcome",
    "SeuReport",
    "StateClass",
    "Stg",
    "WitnessStep",
    "WitnessTrace",
    "__version__",
    "build_register_graph",
    "check_reachable",
    "check_reachable_backward",
    "classify_states",
    "cluster_registers",
    "compute_legal_set",
    "emit_bench",
    "emit_vectors",
    "enumerate_stg",
    "evaluate_cycle",
    "extract_abstract",
    "extract_candidate",
    "feedback_groups",
    "gen_encoding",
    "inject_all",
    "make_corrector",
    "min_distance",
    "output_corruption",
    "parse_bench",
    "parse_encoding_table",
    "reencode",
    "replay_witness",
    "report_illegal_loops",
    "set_legal_override",
    "stg_from_edges",
    "synthesize_netlist",
    "to_dot",
    "to_graphml",
    "to_json",
    "validate",
    "write_encoding_table",
]
