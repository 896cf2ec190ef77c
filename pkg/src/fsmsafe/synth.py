"""Netlist synthesis from encoded truth tables, .bench and stimulus emission.

Synthesis is two-level minterm sum-of-products with no minimization:
correct by construction, deterministic, and easy to audit.  Variables are
ordered state bits first (s0..s{w-1}) then input bits (in0..in{m-1}), so
truth-table row ``word | (input << w)`` drives everything.
"""

from __future__ import annotations

import numpy as np

from .bench import FlipFlop, Gate, Net, Netlist, validate
from .encoding import EncodedTables
from .errors import CapacityExceededError, EmptyNetlistError, TraceMismatchError

SYNTH_CAP_BITS = 20


# ---------------------------------------------------------------------------
# sum-of-products covers


class SopCover:
    """Product terms for one target bit.

    Each term is a tuple over the variables with entries 1 (positive
    literal), 0 (negative literal), or -1 (absent).  Minterm construction
    uses full terms; merging is allowed but optional.
    """

    def __init__(self, num_vars: int, terms):
        self.num_vars = num_vars
        self.terms = tuple(tuple(t) for t in terms)

    def evaluate(self, assignment: int) -> int:
        for term in self.terms:
            if all(
                lit == -1 or ((assignment >> v) & 1) == lit
                for v, lit in enumerate(term)
            ):
                return 1
        return 0


def cover_from_truth(truth: np.ndarray, num_vars: int) -> SopCover:
    """Minterm cover of a full truth table (bool array of length 2^num_vars)."""
    truth = np.asarray(truth, dtype=bool)
    if truth.shape != (1 << num_vars,):
        raise ValueError(f"truth table must have 2^{num_vars} rows")
    terms = []
    for a in np.flatnonzero(truth):
        a = int(a)
        terms.append(tuple((a >> v) & 1 for v in range(num_vars)))
    return SopCover(num_vars, terms)


# ---------------------------------------------------------------------------
# synthesis


class _Builder:
    def __init__(self):
        self.names = []
        self.ids = {}
        self.gates = []

    def net(self, name: str) -> int:
        if name in self.ids:
            raise ValueError(f"net {name} already created")
        self.ids[name] = len(self.names)
        self.names.append(name)
        return self.ids[name]

    def gate(self, kind: str, out_name: str, input_ids) -> int:
        out = self.net(out_name)
        self.gates.append(Gate(kind, tuple(input_ids), out))
        return out


def synthesize_netlist(tables: EncodedTables, name: str = "reencoded") -> Netlist:
    """Realize encoded truth tables as a .bench-style netlist.

    One DFF per state bit (init = reset codeword bit); every next-state and
    output bit is an OR of AND minterms over the state and input literals.
    Raises CapacityExceeded when w + m > 20.
    """
    w, m, k = tables.width, tables.input_width, tables.output_width
    num_vars = w + m
    if num_vars > SYNTH_CAP_BITS:
        raise CapacityExceededError(
            f"{w} state bits + {m} input bits exceed the {SYNTH_CAP_BITS}-bit synthesis cap"
        )

    b = _Builder()
    input_ids = [b.net(f"in{i}") for i in range(m)]
    state_ids = [b.net(f"s{j}") for j in range(w)]
    var_ids = state_ids + input_ids
    var_names = [f"s{j}" for j in range(w)] + [f"in{i}" for i in range(m)]
    inverted = {}

    def literal(v: int, polarity: int) -> int:
        if polarity:
            return var_ids[v]
        if v not in inverted:
            inverted[v] = b.gate("NOT", f"not_{var_names[v]}", [var_ids[v]])
        return inverted[v]

    size = 1 << num_vars
    assignments = np.arange(size, dtype=np.uint32)
    words = assignments & np.uint32((1 << w) - 1)
    invecs = assignments >> np.uint32(w)

    def truth_of(bit: int, table: np.ndarray) -> np.ndarray:
        return (table[words, invecs] >> np.uint64(bit)) & np.uint64(1) != 0

    def build_bit(target: str, truth: np.ndarray) -> None:
        minterms = [int(a) for a in np.flatnonzero(truth)]
        if not minterms:
            b.gate("AND", target, [literal(0, 1), literal(0, 0)])
            return
        if len(minterms) == size:
            b.gate("OR", target, [literal(0, 1), literal(0, 0)])
            return
        term_ids = []
        for idx, a in enumerate(minterms):
            lits = [literal(v, (a >> v) & 1) for v in range(num_vars)]
            if len(lits) == 1:
                term_ids.append(("single", lits[0]))
                continue
            if len(minterms) == 1:
                b.gate("AND", target, lits)
                return
            term_ids.append(("and", b.gate("AND", f"{target}_t{idx}", lits)))
        if len(term_ids) == 1:
            b.gate("BUFF", target, [term_ids[0][1]])
            return
        b.gate("OR", target, [t[1] for t in term_ids])

    for j in range(w):
        build_bit(f"ns{j}", truth_of(j, tables.next_words.astype(np.uint64)))
    for bit in range(k):
        build_bit(f"out{bit}", truth_of(bit, tables.outputs))

    flops = tuple(
        FlipFlop("DFF", b.ids[f"ns{j}"], state_ids[j], init=(tables.reset_word >> j) & 1)
        for j in range(w)
    )
    netlist = Netlist(
        name=name,
        nets=tuple(Net(i, n) for i, n in enumerate(b.names)),
        inputs=tuple(input_ids),
        outputs=tuple(b.ids[f"out{bit}"] for bit in range(k)),
        gates=tuple(b.gates),
        flops=flops,
    )
    netlist.topo_gate_order()
    return netlist


# ---------------------------------------------------------------------------
# emission


def emit_bench(netlist: Netlist) -> str:
    """Serialize to .bench text: inputs, outputs, flops, gates in topo order.

    Nonzero flop init values are carried as `# init <net> <bit>` comment
    pragmas.  parse_bench of the result is isomorphic to the input.
    """
    diags = validate(netlist)
    if any(d.code == "EMPTY_NETLIST" for d in diags):
        raise EmptyNetlistError("refusing to emit an empty netlist")
    lines = [f"# {netlist.name}"]
    for nid in netlist.inputs:
        lines.append(f"INPUT({netlist.net_name(nid)})")
    for nid in netlist.outputs:
        lines.append(f"OUTPUT({netlist.net_name(nid)})")
    for f in netlist.flops:
        args = netlist.net_name(f.data)
        if f.kind == "DFFE":
            args += f", {netlist.net_name(f.enable)}"
        lines.append(f"{netlist.net_name(f.output)} = {f.kind}({args})")
    for f in netlist.flops:
        if f.init:
            lines.append(f"# init {netlist.net_name(f.output)} {f.init}")
    for k in netlist.topo_gate_order():
        g = netlist.gates[k]
        args = ", ".join(netlist.net_name(i) for i in g.inputs)
        lines.append(f"{netlist.net_name(g.output)} = {g.kind}({args})")
    return "\n".join(lines) + "\n"


def emit_vectors(trace, candidate) -> str:
    """Render a witness trace as stimulus CSV.

    Header `cycle,<input nets...>,<state nets...>,seu_bit`; one row per
    step with the input bits, the expected post-transition (post-flip)
    state bits, and the flipped bit index or empty.  Replays the trace
    first and raises TraceMismatch if it diverges.
    """
    header = ["cycle", *candidate.control_net_names, *candidate.state_net_names, "seu_bit"]
    rows = [",".join(header)]
    if trace.steps:
        cur = trace.steps[0].state_before
        for cycle, step in enumerate(trace.steps):
            if step.state_before != cur:
                raise TraceMismatchError(
                    f"step {cycle}: recorded state {step.state_before}, simulated {cur}"
                )
            nxt = candidate.eval_next(cur, step.input_vector)
            if step.seu_flip is not None:
                nxt ^= 1 << step.seu_flip
            in_bits = [str((step.input_vector >> i) & 1) for i in range(candidate.m)]
            st_bits = [str((nxt >> j) & 1) for j in range(candidate.n)]
            seu = "" if step.seu_flip is None else str(step.seu_flip)
            rows.append(",".join([str(cycle), *in_bits, *st_bits, seu]))
            cur = nxt
        if cur != trace.final_state:
            raise TraceMismatchError(
                f"trace ends at {cur}, recorded final_state {trace.final_state}"
            )
    return "\n".join(rows) + "\n"
