"""Deterministic serialization of analyzed STGs: DOT, GraphML, JSON.

Styling: legal states are blue, illegal states red, node labels show the
state in binary and decimal.  Parallel edges between the same states
collapse into one edge labeled with the hex input vectors that take it,
or "*" when every input agrees.  Full 2^n graphs are emitted only for
n <= 12 by default; larger graphs reduce to the legal subgraph plus the
illegal states within Hamming distance 1 (the single-flip frontier),
with ``full=True`` as the override.
"""

from __future__ import annotations

import json
from xml.sax.saxutils import escape

from .errors import LegalSetMissingError
from .stg import Stg, report_illegal_loops

FULL_GRAPH_BITS = 12

LEGAL_COLOR = "blue"
ILLEGAL_COLOR = "red"


def _require_classes(stg: Stg):
    if stg.legal is None:
        raise LegalSetMissingError("legal set not computed")
    if stg.classes is None:
        raise ValueError("classify_states must run before export")


def _node_set(stg: Stg, full: bool | None) -> list:
    if full or (full is None and stg.n <= FULL_GRAPH_BITS):
        return list(range(stg.num_states))
    keep = set(stg.legal)
    for s in stg.legal:
        for b in range(stg.n):
            keep.add(s ^ (1 << b))
    return sorted(keep)


def _edge_label(stg: Stg, inputs: list) -> str:
    if len(inputs) == stg.num_inputs:
        return "*"
    return ",".join(hex(i) for i in inputs)


def _grouped_edges(stg: Stg, nodes: list):
    """Yield (source, target, label) with targets ascending per source."""
    node_set = set(nodes)
    for s in nodes:
        by_target = {}
        for i in range(stg.num_inputs):
            t = int(stg.edges[s, i])
            if t in node_set:
                by_target.setdefault(t, []).append(i)
        for t in sorted(by_target):
            yield s, t, _edge_label(stg, by_target[t])


def _label(stg: Stg, state: int) -> str:
    return f"{state:0{stg.n}b} ({state})"


def to_dot(stg: Stg, full: bool | None = None) -> str:
    """Graphviz text; byte-stable for a fixed Stg."""
    _require_classes(stg)
    nodes = _node_set(stg, full)
    lines = ["digraph stg {", "  node [shape=ellipse, style=filled];"]
    for s in nodes:
        color = LEGAL_COLOR if s in stg.legal else ILLEGAL_COLOR
        lines.append(f'  s{s} [label="{_label(stg, s)}", fillcolor={color}];')
    for s, t, label in _grouped_edges(stg, nodes):
        lines.append(f'  s{s} -> s{t} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(stg: Stg, full: bool | None = None) -> str:
    """GraphML with node label/color/class keys and edge input labels."""
    _require_classes(stg)
    nodes = _node_set(stg, full)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="d0" for="node" attr.name="label" attr.type="string"/>',
        '  <key id="d1" for="node" attr.name="color" attr.type="string"/>',
        '  <key id="d2" for="node" attr.name="class" attr.type="string"/>',
        '  <key id="d3" for="edge" attr.name="inputs" attr.type="string"/>',
        '  <graph id="stg" edgedefault="directed">',
    ]
    for s in nodes:
        color = LEGAL_COLOR if s in stg.legal else ILLEGAL_COLOR
        out.append(f'    <node id="n{s}">')
        out.append(f'      <data key="d0">{escape(_label(stg, s))}</data>')
        out.append(f'      <data key="d1">{color}</data>')
        out.append(f'      <data key="d2">{stg.class_of(s).key}</data>')
        out.append("    </node>")
    for s, t, label in _grouped_edges(stg, nodes):
        out.append(f'    <edge source="n{s}" target="n{t}">')
        out.append(f'      <data key="d3">{escape(label)}</data>')
        out.append("    </edge>")
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def to_json(stg: Stg, seu_report=None, loops=None) -> str:
    """Machine-readable analysis report; stable field names and order."""
    _require_classes(stg)
    if loops is None:
        loops = report_illegal_loops(stg)
    cand = stg.candidate
    bundle = {
        "candidate": {
            "n": stg.n,
            "m": stg.m,
            "state_nets": list(
                cand.state_net_names if cand else (f"s{j}" for j in range(stg.n))
            ),
            "control_nets": list(
                cand.control_net_names if cand else (f"in{i}" for i in range(stg.m))
            ),
        },
        "counts": stg.counts(),
        "seu": seu_report.counts() if seu_report is not None else None,
        "loops": [{"states": list(lp.states), "kind": lp.kind} for lp in loops],
        "worst_recovery_depth": stg.worst_recovery_depth(),
    }
    return json.dumps(bundle, indent=2) + "\n"
