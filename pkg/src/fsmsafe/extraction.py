"""State-register discovery and FSM candidate extraction.

A flip-flop's support is the set of primary inputs and flop outputs in the
transitive fan-in of its data (and enable) nets.  Flops whose supports
overlap and that sit in feedback with each other are grouped into FSM
candidates:

1. build a directed feedback graph with an edge a -> b when flop a's output
   is in flop b's support;
2. seed groups with the strongly connected components;
3. repeatedly merge the pair of feedback-bearing groups with the highest
   mean inter-group support similarity (Jaccard) while it is >= theta,
   ties broken by the lowest smallest-member index.

Singleton flops with no self-feedback never merge; they are pipeline or
capture registers, not state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bench import Netlist, _apply_gate, pack_planes, unpack_values
from .errors import EmptyGroupError

# ---------------------------------------------------------------------------
# register dependency graph


@dataclass(frozen=True)
class RegisterEdge:
    weight: float        # Jaccard similarity of the two supports
    a_feeds_b: bool      # lower-index flop's output is in the higher's support
    b_feeds_a: bool


@dataclass(frozen=True)
class RegisterDependencyGraph:
    netlist: Netlist
    supports: tuple      # per flop: frozenset of net ids (PIs and flop outputs)
    edges: dict          # (i, j) with i < j -> RegisterEdge; absent means 0, no feed
    self_feedback: tuple  # per flop: its own output is in its support

    def weight(self, i: int, j: int) -> float:
        if i == j:
            return 1.0
        key = (min(i, j), max(i, j))
        e = self.edges.get(key)
        return e.weight if e else 0.0

    def feeds(self, i: int, j: int) -> bool:
        """True when flop i's output is in flop j's support."""
        if i == j:
            return self.self_feedback[i]
        e = self.edges.get((min(i, j), max(i, j)))
        if e is None:
            return False
        return e.a_feeds_b if i < j else e.b_feeds_a


def fanin_cone(netlist: Netlist, roots, stop_at=None):
    """Nets in the transitive fan-in of ``roots``.

    Traversal stops at (but includes) primary inputs, flop outputs, and any
    net in ``stop_at``.  Returns (sources, gate_indices): the stopping nets
    reached and the gates traversed.
    """
    drivers = netlist.driver_map()
    stop_at = set() if stop_at is None else set(stop_at)
    sources = set()
    gates = set()
    seen = set()
    stack = list(roots)
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        kind, idx = drivers[nid]
        if nid in stop_at or kind in ("input", "flop"):
            sources.add(nid)
            continue
        gates.add(idx)
        stack.extend(netlist.gates[idx].inputs)
    return sources, gates


def flop_support(netlist: Netlist, flop_index: int) -> frozenset:
    """Support of one flop: fan-in sources of its data and enable nets."""
    f = netlist.flops[flop_index]
    roots = [f.data] if f.enable is None else [f.data, f.enable]
    sources, _ = fanin_cone(netlist, roots)
    return frozenset(sources)


def build_register_graph(netlist: Netlist) -> RegisterDependencyGraph:
    """Exact supports plus pairwise Jaccard weights and feedback flags."""
    supports = tuple(flop_support(netlist, i) for i in range(len(netlist.flops)))
    out_net = {f.output: i for i, f in enumerate(netlist.flops)}
    self_feedback = tuple(
        netlist.flops[i].output in supports[i] for i in range(len(netlist.flops))
    )
    edges = {}
    nf = len(netlist.flops)
    for i in range(nf):
        for j in range(i + 1, nf):
            inter = len(supports[i] & supports[j])
            union = len(supports[i] | supports[j])
            w = inter / union if union else 0.0
            ij = netlist.flops[i].output in supports[j]
            ji = netlist.flops[j].output in supports[i]
            if w > 0.0 or ij or ji:
                edges[(i, j)] = RegisterEdge(w, ij, ji)
    return RegisterDependencyGraph(netlist, supports, edges, self_feedback)


def strongly_connected_components(adjacency) -> list:
    """Iterative Tarjan SCC.  Deterministic: roots and neighbors ascending.

    Returns components as sorted tuples, ordered by smallest member.
    """
    n = len(adjacency)
    adj = [sorted(a) for a in adjacency]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    components = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                w = adj[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    components.sort(key=lambda c: c[0])
    return components


def cluster_registers(graph: RegisterDependencyGraph, theta: float = 0.5) -> list:
    """Partition flops into candidate groups.

    Returns a list of sorted flop-index tuples, ordered by smallest member.
    Only feedback-bearing groups (an SCC of size >= 2, or a singleton whose
    flop feeds itself) participate in merging; other singletons are left
    alone regardless of theta.
    """
    nf = len(graph.supports)
    adj = [[] for _ in range(nf)]
    for (i, j), e in graph.edges.items():
        if e.a_feeds_b:
            adj[i].append(j)
        if e.b_feeds_a:
            adj[j].append(i)
    sccs = strongly_connected_components(adj)
    mergeable = []
    fixed = []
    for comp in sccs:
        if len(comp) >= 2 or graph.self_feedback[comp[0]]:
            mergeable.append(set(comp))
        else:
            fixed.append(comp)

    def mean_weight(a, b):
        total = sum(graph.weight(i, j) for i in a for j in b)
        return total / (len(a) * len(b))

    while len(mergeable) > 1:
        best = None
        for x in range(len(mergeable)):
            for y in range(x + 1, len(mergeable)):
                w = mean_weight(mergeable[x], mergeable[y])
                if w < theta:
                    continue
                union = tuple(sorted(mergeable[x] | mergeable[y]))
                key = (-w, union[0], union)
                if best is None or key < best[0]:
                    best = (key, x, y)
        if best is None:
            break
        _, x, y = best
        mergeable[x] |= mergeable[y]
        del mergeable[y]

    groups = [tuple(sorted(g)) for g in mergeable] + [tuple(c) for c in fixed]
    groups.sort(key=lambda g: g[0])
    return groups


def feedback_groups(graph: RegisterDependencyGraph, groups) -> list:
    """The subset of groups that carry feedback (FSM candidates)."""
    out = []
    for g in groups:
        if len(g) >= 2 or graph.self_feedback[g[0]]:
            out.append(g)
    return out


def parse_group_file(netlist: Netlist, text: str):
    """Group override: one flop output net name per line; # comments allowed."""
    out_net = {netlist.net_name(f.output): i for i, f in enumerate(netlist.flops)}
    indices = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        name = raw.split("#", 1)[0].strip()
        if not name:
            continue
        if name not in out_net:
            raise ValueError(f"group file line {line_no}: {name} is not a flop output")
        if out_net[name] not in indices:
            indices.append(out_net[name])
    return tuple(sorted(indices))


# ---------------------------------------------------------------------------
# candidate cones


@dataclass(frozen=True)
class OutputTarget:
    """A net through which the group is observable from outside.

    role "po": combinational primary output; "ff-data": data net of a foreign
    flop (enable_net set when that flop is a DFFE, for hold semantics);
    "ff-enable": enable net of a foreign flop fed by the group.
    """

    label: str
    value_net: int
    enable_net: int | None
    role: str


class ConeEvaluator:
    """Compiled evaluator for the gates between source nets and read nets."""

    def __init__(self, netlist: Netlist, source_nets, read_nets):
        self.netlist = netlist
        sources, gate_set = fanin_cone(netlist, read_nets, stop_at=source_nets)
        stray = sources - set(source_nets)
        if stray:
            names = ", ".join(sorted(netlist.net_name(s) for s in stray))
            raise ValueError(f"cone escapes declared sources via: {names}")
        self.local = {nid: k for k, nid in enumerate(source_nets)}
        order = [k for k in netlist.topo_gate_order() if k in gate_set]
        self.ops = []
        for k in order:
            g = netlist.gates[k]
            self.local[g.output] = len(self.local)
            self.ops.append((g.kind, self.local[g.output], tuple(self.local[i] for i in g.inputs)))
        self.num_slots = len(self.local)
        self.num_sources = len(source_nets)

    def evaluate(self, source_planes: np.ndarray) -> np.ndarray:
        """source_planes: bool (num_sources, N) -> all slot values (num_slots, N)."""
        n = source_planes.shape[1]
        values = np.zeros((self.num_slots, n), dtype=bool)
        values[: self.num_sources] = source_planes
        for kind, out, ins in self.ops:
            values[out] = _apply_gate(kind, [values[i] for i in ins])
        return values

    def row(self, net_id: int) -> int:
        return self.local[net_id]


@dataclass
class FsmCandidate:
    """A register group plus compiled next-state and output cones.

    State bit k is the group's k-th flop in netlist declaration order;
    input bit k is control_nets[k], control nets sorted by declaration
    order.  eval_* methods are pure functions of their arguments.
    """

    netlist: Netlist
    flop_indices: tuple
    state_nets: tuple      # net ids, bit order
    control_nets: tuple    # net ids, bit order
    targets: tuple         # OutputTarget records
    _cone: ConeEvaluator = field(repr=False, compare=False, default=None)

    @property
    def n(self) -> int:
        return len(self.flop_indices)

    @property
    def m(self) -> int:
        return len(self.control_nets)

    @property
    def state_net_names(self) -> tuple:
        return tuple(self.netlist.net_name(i) for i in self.state_nets)

    @property
    def control_net_names(self) -> tuple:
        return tuple(self.netlist.net_name(i) for i in self.control_nets)

    def reset_value(self) -> int:
        value = 0
        for k, fi in enumerate(self.flop_indices):
            value |= (self.netlist.flops[fi].init & 1) << k
        return value

    def eval_next_many(self, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Next packed state for each (state, input) pair, vectorized."""
        values = self._cone.evaluate(self._source_planes(states, inputs))
        n_assign = len(states)
        next_planes = np.zeros((self.n, n_assign), dtype=bool)
        for k, fi in enumerate(self.flop_indices):
            f = self.netlist.flops[fi]
            data = values[self._cone.row(f.data)]
            if f.kind == "DFF":
                next_planes[k] = data
            else:
                en = values[self._cone.row(f.enable)]
                cur = (np.asarray(states, dtype=np.uint64) >> np.uint64(k)) & np.uint64(1) != 0
                next_planes[k] = np.where(en, data, cur)
        return pack_planes(next_planes)

    def eval_next(self, state: int, input_value: int = 0) -> int:
        return int(
            self.eval_next_many(
                np.array([state], dtype=np.uint32), np.array([input_value], dtype=np.uint32)
            )[0]
        )

    def eval_targets_many(self, states: np.ndarray, inputs: np.ndarray):
        """Target net values and hold flags: bool arrays (T, N), (T, N)."""
        values = self._cone.evaluate(self._source_planes(states, inputs))
        n_assign = len(states)
        vals = np.zeros((len(self.targets), n_assign), dtype=bool)
        held = np.zeros((len(self.targets), n_assign), dtype=bool)
        for t, target in enumerate(self.targets):
            vals[t] = values[self._cone.row(target.value_net)]
            if target.enable_net is not None:
                held[t] = ~values[self._cone.row(target.enable_net)]
        return vals, held

    def _source_planes(self, states, inputs):
        state_planes = unpack_values(np.asarray(states, dtype=np.uint64), self.n)
        input_planes = unpack_values(np.asarray(inputs, dtype=np.uint64), self.m)
        return np.concatenate([state_planes, input_planes], axis=0)


def extract_candidate(netlist: Netlist, group) -> FsmCandidate:
    """Build the candidate for a flop group.

    Gathers the minimal next-state cone (data and enable nets of the group)
    and output cone (primary outputs combinationally reachable from the
    group, and data/enable nets of foreign flops the group feeds), then
    takes every non-group source those cones touch as a control input.

    Raises EmptyGroupError for an empty group.
    """
    group = tuple(sorted(set(group)))
    if not group:
        raise EmptyGroupError("candidate group is empty")
    for i in group:
        if not 0 <= i < len(netlist.flops):
            raise ValueError(f"flop index {i} out of range")

    state_nets = tuple(netlist.flops[i].output for i in group)
    state_set = set(state_nets)

    # forward reachability from group outputs through gates only
    consumers = {}
    for k, g in enumerate(netlist.gates):
        for i in g.inputs:
            consumers.setdefault(i, []).append(k)
    reach = set(state_set)
    stack = list(state_set)
    while stack:
        nid = stack.pop()
        for k in consumers.get(nid, ()):
            out = netlist.gates[k].output
            if out not in reach:
                reach.add(out)
                stack.append(out)

    targets = []
    seen_targets = set()

    def add_target(label, value_net, enable_net, role):
        key = (value_net, enable_net, role)
        if key not in seen_targets:
            seen_targets.add(key)
            targets.append(OutputTarget(label, value_net, enable_net, role))

    drivers = netlist.driver_map()
    for po in netlist.outputs:
        kind, idx = drivers[po]
        if kind == "flop" and idx not in group:
            continue  # observable only through that flop's data net, below
        if po in reach:
            add_target(netlist.net_name(po), po, None, "po")
    for fi, f in enumerate(netlist.flops):
        if fi in group:
            continue
        if f.data in reach:
            add_target(netlist.net_name(f.output), f.data, f.enable, "ff-data")
        if f.enable is not None and f.enable in reach:
            add_target(netlist.net_name(f.enable), f.enable, None, "ff-enable")

    roots = set()
    for i in group:
        f = netlist.flops[i]
        roots.add(f.data)
        if f.enable is not None:
            roots.add(f.enable)
    for t in targets:
        roots.add(t.value_net)
        if t.enable_net is not None:
            roots.add(t.enable_net)

    sources, _ = fanin_cone(netlist, roots, stop_at=state_set)
    control_nets = tuple(sorted(sources - state_set))
    cone = ConeEvaluator(netlist, state_nets + control_nets, sorted(roots))
    return FsmCandidate(
        netlist=netlist,
        flop_indices=group,
        state_nets=state_nets,
        control_nets=control_nets,
        targets=tuple(targets),
        _cone=cone,
    )
