"""Stage orchestration shared by every service endpoint.

Each helper is a pure function from parsed inputs to analysis objects;
the HTTP layer only validates request shapes and maps exceptions.  The
`UsageError` here marks semantically bad requests (unknown scheme, group
index out of range) as opposed to netlist or analysis failures.
"""

from __future__ import annotations

import logging

from ..bench import BitVector, Netlist, parse_bench
from ..encoding import (
    extract_abstract,
    gen_encoding,
    make_corrector,
    min_distance,
    parse_encoding_table,
    reencode,
    write_encoding_table,
)
from ..errors import CapacityExceededError
from ..export import to_dot, to_graphml, to_json
from ..extraction import (
    FsmCandidate,
    build_register_graph,
    cluster_registers,
    extract_candidate,
    feedback_groups,
)
from ..reach import ReachQuery, check_reachable, replay_witness
from ..seu import inject_all, output_corruption
from ..stg import (
    Stg,
    classify_states,
    compute_legal_set,
    enumerate_stg,
    report_illegal_loops,
    set_legal_override,
)
from ..synth import emit_bench, emit_vectors, synthesize_netlist

log = logging.getLogger("fsmsafe")

EXPOSURE_CAP_BITS = 16  # skip output_corruption when n + m exceeds this


class UsageError(Exception):
    """A well-formed request asking for something that makes no sense."""


def load(bench: str, name: str) -> Netlist:
    netlist = parse_bench(bench, name=name)
    log.info(
        "parsed %s: %d inputs, %d outputs, %d flops, %d gates",
        name, len(netlist.inputs), len(netlist.outputs),
        len(netlist.flops), len(netlist.gates),
    )
    return netlist


def clusters(netlist: Netlist, theta: float):
    if not 0.0 <= theta <= 1.0:
        raise UsageError(f"theta must be in [0, 1], got {theta}")
    graph = build_register_graph(netlist)
    groups = cluster_registers(graph, theta=theta)
    return graph, groups


def resolve_group(netlist: Netlist, groups, graph, group=None, group_index=None):
    """Pick the group to analyze: explicit flops, an index, or the default.

    Default is the first feedback-bearing group (clusters are ordered by
    smallest member), falling back to the first group.
    """
    if group is not None and group_index is not None:
        raise UsageError("give either group or group_index, not both")
    if group is not None:
        nf = len(netlist.flops)
        by_name = {netlist.net_name(f.output): i for i, f in enumerate(netlist.flops)}
        indices = set()
        for item in group:
            if isinstance(item, str) and not item.strip().isdigit():
                name = item.strip()
                if name not in by_name:
                    raise UsageError(f"{name!r} is not a flop output net")
                indices.add(by_name[name])
            else:
                indices.add(int(item))
        chosen = tuple(sorted(indices))
        for i in chosen:
            if not 0 <= i < nf:
                raise UsageError(f"flop index {i} out of range (netlist has {nf})")
        if not chosen:
            raise UsageError("group override is empty")
        return chosen
    if group_index is not None:
        if not 0 <= group_index < len(groups):
            raise UsageError(
                f"group_index {group_index} out of range ({len(groups)} groups)"
            )
        return groups[group_index]
    fb = feedback_groups(graph, groups)
    return fb[0] if fb else groups[0]


def parse_reset(candidate: FsmCandidate, reset) -> tuple | None:
    """Reset override: binary strings (MSB first) or ints, None passes through."""
    if reset is None:
        return None
    states = []
    for item in reset:
        if isinstance(item, str):
            s = item.strip()
            if len(s) != candidate.n or set(s) - {"0", "1"}:
                raise UsageError(
                    f"reset {s!r} is not a {candidate.n}-bit binary string"
                )
            states.append(int(BitVector.from_string(s)))
        else:
            states.append(int(item))
    for s in states:
        if not 0 <= s < (1 << candidate.n):
            raise UsageError(f"reset state {s} out of range for {candidate.n} bits")
    if not states:
        raise UsageError("reset override is empty")
    return tuple(sorted(set(states)))


def build_stg(candidate: FsmCandidate, reset=None, legal_states=None) -> Stg:
    stg = enumerate_stg(candidate)
    stg = compute_legal_set(stg, reset_states=parse_reset(candidate, reset))
    if legal_states is not None:
        stg = set_legal_override(stg, legal_states)
    stg = classify_states(stg)
    log.info("stg: n=%d m=%d counts=%s", stg.n, stg.m, stg.counts())
    return stg


def exposure_counts(stg: Stg):
    """Output-corruption summary, or None when past the exposure cap."""
    if stg.candidate is None or stg.n + stg.m > EXPOSURE_CAP_BITS:
        return None
    return output_corruption(stg).counts()


def corrector_from_table(text: str, netlist_reset: int):
    table = parse_encoding_table(text)
    default = table.decode(netlist_reset)
    return make_corrector(table, default_id=default if default is not None else 0)


def run_reencode(stg: Stg, scheme: str, with_corrector: bool, name: str):
    scheme = scheme.lower()
    if scheme not in ("binary", "gray", "onehot", "hamming3"):
        raise UsageError(f"unknown scheme {scheme!r}")
    fsm = extract_abstract(stg)
    table = gen_encoding(scheme, fsm.num_states)
    corrector = make_corrector(table, fsm.default_id) if with_corrector else None
    tables = reencode(fsm, table, corrector)
    netlist = synthesize_netlist(tables, name=f"{name}_{scheme}")
    return {
        "scheme": scheme,
        "width": table.width,
        "min_distance": min_distance(table),
        "corrector": with_corrector,
        "num_states": fsm.num_states,
        "table": write_encoding_table(table),
        "bench": emit_bench(netlist),
    }


def run_reach(stg: Stg, target, sources, budget, max_cycles):
    query = ReachQuery(
        target=target, sources=tuple(sources) if sources else None,
        budget=budget, max_cycles=max_cycles,
    )
    trace = check_reachable(stg, query)
    if trace is None:
        return None
    replay_witness(stg, trace)
    vectors = emit_vectors(trace, stg.candidate) if stg.candidate else None
    return trace, vectors


def analyze_group(netlist: Netlist, group, seu_k: int, reset=None,
                  legal_states=None, full_graph: bool = False) -> dict:
    """Full pipeline for one group; capacity overruns mark it skipped."""
    entry = {"group": list(group), "skipped": None}
    try:
        candidate = extract_candidate(netlist, group)
        stg = build_stg(candidate, reset=reset, legal_states=legal_states)
    except CapacityExceededError as exc:
        log.warning("group %s skipped: %s", group, exc)
        entry["skipped"] = str(exc)
        return entry
    report = inject_all(stg, k=min(seu_k, stg.n))
    loops = report_illegal_loops(stg)
    counts = stg.counts()
    entry.update(
        n=stg.n,
        m=stg.m,
        state_nets=list(candidate.state_net_names),
        control_nets=list(candidate.control_net_names),
        reset_states=sorted(stg.reset_states),
        counts=counts,
        seu=report.counts(),
        exposure=exposure_counts(stg),
        loops=[{"states": list(lp.states), "kind": lp.kind} for lp in loops],
        worst_recovery_depth=stg.worst_recovery_depth(),
        has_trap=counts["irrecoverable"] + counts["deadlock"] > 0,
        report=to_json(stg, report, loops),
        dot=to_dot(stg, full=True if full_graph else None),
        graphml=to_graphml(stg, full=True if full_graph else None),
    )
    return entry
