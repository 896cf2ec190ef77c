"""Gate-level netlist core: .bench parsing, validation, and cycle evaluation.

The dialect is the ISCAS-89 .bench format plus enable flip-flops:

    INPUT(<net>)
    OUTPUT(<net>)
    <net> = <GATE>(<net>, <net>, ...)
    <net> = DFF(<data>)
    <net> = DFFE(<data>, <enable>)

``#`` starts a comment.  Gate and keyword names are case-insensitive, net
names are case-sensitive.  Supported gates are AND, NAND, OR, NOR, XOR,
XNOR (variadic, folded left) and NOT, BUFF (unary).  There are no X values;
every net is 0 or 1.  A full-line comment of the form ``# init <net> <bit>``
sets a flip-flop's reset value (flops default to 0), which keeps generated
fixtures self-contained while remaining a comment to any other tool.

State vectors order flip-flops by declaration: bit 0 of a state BitVector is
the first-declared flop (the least significant bit of the packed value).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    BenchSyntaxError,
    CombinationalCycleError,
    DuplicateDriverError,
    UndrivenNetError,
    UnknownGateKindError,
    WidthMismatchError,
)

GATE_KINDS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUFF")
FLOP_KINDS = ("DFF", "DFFE")

_UNARY = frozenset({"NOT", "BUFF"})


@dataclass(frozen=True)
class BitVector:
    """A fixed-width vector of bits packed into an int.

    Bit ``i`` is the coefficient of ``2**i``; index 0 is the least
    significant bit and corresponds to the first-declared element of
    whatever the vector indexes (flops, inputs, or outputs).  String
    renderings are most-significant-bit first, matching how binary
    numbers are written.
    """

    width: int
    value: int

    def __post_init__(self):
        if self.width < 0:
            raise WidthMismatchError(f"negative width {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise WidthMismatchError(
                f"value {self.value} does not fit in {self.width} bits"
            )

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        """Build from an iterable of 0/1, index 0 first."""
        bits = list(bits)
        value = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise WidthMismatchError(f"bit {i} is {b!r}, expected 0 or 1")
            value |= b << i
        return cls(len(bits), value)

    @classmethod
    def from_string(cls, text: str) -> "BitVector":
        """Parse an MSB-first binary string such as ``"0101"``."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a binary string: {text!r}")
        return cls(len(text), int(text, 2))

    def bit(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise WidthMismatchError(f"bit index {i} out of range for width {self.width}")
        return (self.value >> i) & 1

    def bits(self) -> tuple:
        """All bits, index 0 first."""
        return tuple((self.value >> i) & 1 for i in range(self.width))

    def flip(self, i: int) -> "BitVector":
        self.bit(i)
        return BitVector(self.width, self.value ^ (1 << i))

    def to_string(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""

    def __int__(self) -> int:
        return self.value

    def __len__(self) -> int:
        return self.width

    def __getitem__(self, i: int) -> int:
        return self.bit(i)

    def __str__(self) -> str:
        return self.to_string()


class Net(NamedTuple):
    """A named wire.  ``id`` is the declaration index within the netlist."""

    id: int
    name: str


@dataclass(frozen=True)
class Gate:
    """A combinational gate; ``inputs`` and ``output`` are net ids."""

    kind: str
    inputs: tuple
    output: int


@dataclass(frozen=True)
class FlipFlop:
    """A DFF or DFFE.

    DFF loads ``data`` every cycle.  DFFE loads ``data`` when ``enable`` is 1
    and holds its current value when ``enable`` is 0.  ``init`` is the reset
    value of the output bit.
    """

    kind: str
    data: int
    output: int
    enable: int | None = None
    init: int = 0


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    nets: tuple = ()


@dataclass
class Netlist:
    """An elaborated netlist.  Treat as immutable after construction."""

    name: str
    nets: tuple
    inputs: tuple          # net ids of primary inputs, declaration order
    outputs: tuple         # net ids of primary outputs, declaration order
    gates: tuple
    flops: tuple

    _topo: tuple = field(default=None, repr=False, compare=False)

    @property
    def num_nets(self) -> int:
        return len(self.nets)

    def net_name(self, net_id: int) -> str:
        return self.nets[net_id].name

    def net_id(self, name: str):
        for net in self.nets:
            if net.name == name:
                return net.id
        raise KeyError(name)

    def flop_output_nets(self) -> tuple:
        return tuple(f.output for f in self.flops)

    def driver_map(self) -> dict:
        """net id -> ("input"|"gate"|"flop", index)."""
        drivers = {}
        for i in self.inputs:
            drivers[i] = ("input", None)
        for k, g in enumerate(self.gates):
            drivers[g.output] = ("gate", k)
        for k, f in enumerate(self.flops):
            drivers[f.output] = ("flop", k)
        return drivers

    def topo_gate_order(self) -> tuple:
        """Gate indices in a deterministic topological order.

        Raises CombinationalCycleError if the combinational graph has a
        cycle (flip-flops cut cycles; their outputs are sources).
        """
        if self._topo is None:
            self._topo = _topo_sort(self)
        return self._topo

    def reset_state(self) -> BitVector:
        return BitVector.from_bits(f.init for f in self.flops)


def _topo_sort(netlist: Netlist) -> tuple:
    producer = {g.output: k for k, g in enumerate(netlist.gates)}
    indegree = [0] * len(netlist.gates)
    consumers = [[] for _ in netlist.gates]
    for k, g in enumerate(netlist.gates):
        for i in g.inputs:
            if i in producer:
                indegree[k] += 1
                consumers[producer[i]].append(k)
    from collections import deque

    ready = deque(k for k, d in enumerate(indegree) if d == 0)
    order = []
    while ready:
        k = ready.popleft()
        order.append(k)
        for c in consumers[k]:
            indegree[c] -= 1
            if indegree[c] == 0:
                ready.append(c)
    if len(order) != len(netlist.gates):
        remaining = [k for k in range(len(netlist.gates)) if indegree[k] > 0]
        cycle = _find_cycle(netlist, remaining, producer)
        raise CombinationalCycleError([netlist.net_name(n) for n in cycle])
    return tuple(order)


def _find_cycle(netlist: Netlist, remaining, producer):
    remaining_set = set(remaining)
    start = remaining[0]
    seen = {}
    path = []
    k = start
    while k not in seen:
        seen[k] = len(path)
        path.append(k)
        k = next(
            producer[i]
            for i in netlist.gates[k].inputs
            if i in producer and producer[i] in remaining_set
        )
    cycle = path[seen[k]:]
    return [netlist.gates[g].output for g in cycle]


_LINE_RE = re.compile(
    r"^\s*(?P<lhs>[^\s(),=#]+)\s*=\s*(?P<kind>[A-Za-z_][A-Za-z0-9_]*)\s*"
    r"\((?P<args>[^()]*)\)\s*$"
)
_IO_RE = re.compile(r"^\s*(?P<kw>INPUT|OUTPUT)\s*\(\s*(?P<net>[^\s(),=#]+)\s*\)\s*$", re.I)
_INIT_RE = re.compile(r"^\s*#\s*init\s+(?P<net>\S+)\s+(?P<bit>[01])\s*$")
_NAME_RE = re.compile(r"^[^\s(),=#]+$")


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse .bench text into a Netlist.

    Parameters
    ----------
    text : str
        Contents of a .bench file.
    name : str
        Name recorded on the netlist (typically the file stem).

    Raises
    ------
    BenchSyntaxError, DuplicateDriverError, UnknownGateKindError,
    UndrivenNetError, CombinationalCycleError
    """
    net_ids: dict = {}
    nets: list = []
    declared: dict = {}          # net id -> ("input", line) | ("assign", line)
    inputs: list = []
    outputs: list = []
    output_seen: set = set()
    assignments: list = []       # (line_no, lhs_id, kind, arg_names)
    uses: dict = {}              # name -> first use line
    inits: list = []             # (line_no, net_name, bit)

    def intern(name_: str) -> int:
        if name_ not in net_ids:
            net_ids[name_] = len(nets)
            nets.append(Net(len(nets), name_))
        return net_ids[name_]

    for line_no, raw in enumerate(text.splitlines(), start=1):
        init_m = _INIT_RE.match(raw)
        if init_m:
            inits.append((line_no, init_m.group("net"), int(init_m.group("bit"))))
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        io_m = _IO_RE.match(line)
        if io_m:
            net_name = io_m.group("net")
            nid = intern(net_name)
            if io_m.group("kw").upper() == "INPUT":
                if nid in declared:
                    raise DuplicateDriverError(
                        f"line {line_no}: net {net_name} already driven"
                    )
                declared[nid] = ("input", line_no)
                inputs.append(nid)
            else:
                uses.setdefault(net_name, line_no)
                if nid not in output_seen:
                    output_seen.add(nid)
                    outputs.append(nid)
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise BenchSyntaxError(line_no, f"cannot parse: {line!r}")
        lhs = m.group("lhs")
        kind = m.group("kind").upper()
        args = [a.strip() for a in m.group("args").split(",")] if m.group("args").strip() else []
        if any(not _NAME_RE.match(a) for a in args):
            raise BenchSyntaxError(line_no, f"bad argument list: {m.group('args')!r}")
        lhs_id = intern(lhs)
        if lhs_id in declared:
            raise DuplicateDriverError(f"line {line_no}: net {lhs} already driven")
        declared[lhs_id] = ("assign", line_no)
        for a in args:
            uses.setdefault(a, line_no)
        assignments.append((line_no, lhs_id, kind, args))

    missing = sorted(
        (n for n in uses if net_ids.get(n) not in declared),
        key=lambda n: (uses[n], n),
    )
    if missing:
        first = missing[0]
        raise UndrivenNetError(
            f"line {uses[first]}: net(s) never driven: " + ", ".join(missing)
        )

    gates: list = []
    flops: list = []
    for line_no, lhs_id, kind, args in assignments:
        arg_ids = tuple(net_ids[a] for a in args)
        if kind == "DFF":
            if len(arg_ids) != 1:
                raise BenchSyntaxError(line_no, f"DFF takes 1 input, got {len(arg_ids)}")
            flops.append(FlipFlop("DFF", arg_ids[0], lhs_id))
        elif kind == "DFFE":
            if len(arg_ids) != 2:
                raise BenchSyntaxError(line_no, f"DFFE takes 2 inputs, got {len(arg_ids)}")
            flops.append(FlipFlop("DFFE", arg_ids[0], lhs_id, enable=arg_ids[1]))
        elif kind in _UNARY:
            if len(arg_ids) != 1:
                raise BenchSyntaxError(line_no, f"{kind} takes 1 input, got {len(arg_ids)}")
            gates.append(Gate(kind, arg_ids, lhs_id))
        elif kind in GATE_KINDS:
            if len(arg_ids) < 2:
                raise BenchSyntaxError(
                    line_no, f"{kind} takes at least 2 inputs, got {len(arg_ids)}"
                )
            gates.append(Gate(kind, arg_ids, lhs_id))
        else:
            raise UnknownGateKindError(f"line {line_no}: unknown gate kind {kind}")

    if inits:
        by_output = {f.output: i for i, f in enumerate(flops)}
        for line_no, net_name, bit in inits:
            nid = net_ids.get(net_name)
            if nid is None or nid not in by_output:
                raise BenchSyntaxError(line_no, f"init pragma targets non-flop net {net_name}")
            i = by_output[nid]
            f = flops[i]
            flops[i] = FlipFlop(f.kind, f.data, f.output, enable=f.enable, init=bit)

    netlist = Netlist(
        name=name,
        nets=tuple(nets),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        gates=tuple(gates),
        flops=tuple(flops),
    )
    netlist.topo_gate_order()  # raises CombinationalCycleError on cycles
    return netlist


def validate(netlist: Netlist) -> list:
    """Structural checks for hand-built netlists.

    Returns a deterministic, ordered list of Diagnostic.  parse_bench output
    always validates cleanly apart from possible UNUSED warnings.
    """
    diags = []
    if not (netlist.inputs or netlist.gates or netlist.flops or netlist.outputs):
        diags.append(Diagnostic("EMPTY_NETLIST", "netlist has no content"))
        return diags

    driven: dict = {}
    for nid in netlist.inputs:
        driven.setdefault(nid, []).append("INPUT")
    for g in netlist.gates:
        driven.setdefault(g.output, []).append(g.kind)
    for f in netlist.flops:
        driven.setdefault(f.output, []).append(f.kind)
    for nid, sources in sorted(driven.items()):
        if len(sources) > 1:
            diags.append(
                Diagnostic(
                    "DUPLICATE_DRIVER",
                    f"net {netlist.net_name(nid)} driven by {len(sources)} sources",
                    (netlist.net_name(nid),),
                )
            )

    used = set(netlist.outputs)
    referenced = set(netlist.outputs)
    for g in netlist.gates:
        referenced.update(g.inputs)
        used.update(g.inputs)
    for f in netlist.flops:
        referenced.add(f.data)
        used.add(f.data)
        if f.enable is not None:
            referenced.add(f.enable)
            used.add(f.enable)
    for nid in sorted(referenced - set(driven)):
        diags.append(
            Diagnostic(
                "UNDRIVEN",
                f"net {netlist.net_name(nid)} is referenced but never driven",
                (netlist.net_name(nid),),
            )
        )

    for g in netlist.gates:
        bad = (g.kind in _UNARY and len(g.inputs) != 1) or (
            g.kind not in _UNARY and len(g.inputs) < 2
        )
        if g.kind not in GATE_KINDS:
            diags.append(
                Diagnostic("UNKNOWN_KIND", f"gate kind {g.kind}", (netlist.net_name(g.output),))
            )
        elif bad:
            diags.append(
                Diagnostic(
                    "BAD_ARITY",
                    f"{g.kind} with {len(g.inputs)} inputs",
                    (netlist.net_name(g.output),),
                )
            )

    for f in netlist.flops:
        if f.init not in (0, 1):
            diags.append(
                Diagnostic("BAD_INIT", f"init {f.init}", (netlist.net_name(f.output),))
            )

    try:
        netlist.topo_gate_order()
    except CombinationalCycleError as e:
        diags.append(Diagnostic("COMBINATIONAL_CYCLE", str(e), e.cycle_nets))

    for nid in sorted(set(driven) - used):
        diags.append(
            Diagnostic(
                "UNUSED",
                f"net {netlist.net_name(nid)} drives nothing",
                (netlist.net_name(nid),),
            )
        )

    diags.sort(key=lambda d: (d.code, d.nets))
    return diags


def _apply_gate(kind: str, rows):
    if kind == "AND":
        return np.logical_and.reduce(rows)
    if kind == "NAND":
        return ~np.logical_and.reduce(rows)
    if kind == "OR":
        return np.logical_or.reduce(rows)
    if kind == "NOR":
        return ~np.logical_or.reduce(rows)
    if kind == "XOR":
        return np.logical_xor.reduce(rows)
    if kind == "XNOR":
        return ~np.logical_xor.reduce(rows)
    if kind == "NOT":
        return ~rows[0]
    if kind == "BUFF":
        return rows[0].copy()
    raise UnknownGateKindError(kind)


def evaluate_many(netlist: Netlist, state_planes: np.ndarray, input_planes: np.ndarray):
    """Vectorized one-cycle evaluation over N assignments at once.

    Parameters
    ----------
    state_planes : bool array (num_flops, N)
        Current flop values, row order = flop declaration order.
    input_planes : bool array (num_inputs, N)
        Primary input values.

    Returns
    -------
    (next_planes, output_planes) : bool arrays (num_flops, N), (num_outputs, N)
    """
    n_assign = state_planes.shape[1] if len(netlist.flops) else input_planes.shape[1]
    values = np.zeros((netlist.num_nets, n_assign), dtype=bool)
    for row, nid in enumerate(netlist.inputs):
        values[nid] = input_planes[row]
    for row, f in enumerate(netlist.flops):
        values[f.output] = state_planes[row]
    for k in netlist.topo_gate_order():
        g = netlist.gates[k]
        values[g.output] = _apply_gate(g.kind, [values[i] for i in g.inputs])

    next_planes = np.zeros((len(netlist.flops), n_assign), dtype=bool)
    for row, f in enumerate(netlist.flops):
        if f.kind == "DFF":
            next_planes[row] = values[f.data]
        else:
            en = values[f.enable]
            next_planes[row] = np.where(en, values[f.data], state_planes[row])
    output_planes = values[list(netlist.outputs)] if netlist.outputs else np.zeros(
        (0, n_assign), dtype=bool
    )
    return next_planes, output_planes


def evaluate_cycle(netlist: Netlist, state: BitVector, inputs: BitVector):
    """One synchronous cycle: (state, inputs) -> (next_state, outputs).

    Pure function of its arguments.  DFF next value is its data net; DFFE
    holds its current bit when enable is 0.  Output bit order follows the
    OUTPUT declarations, state bit order the flop declarations.
    """
    if state.width != len(netlist.flops):
        raise WidthMismatchError(
            f"state width {state.width}, netlist has {len(netlist.flops)} flops"
        )
    if inputs.width != len(netlist.inputs):
        raise WidthMismatchError(
            f"input width {inputs.width}, netlist has {len(netlist.inputs)} inputs"
        )
    state_planes = np.array([[b] for b in state.bits()], dtype=bool).reshape(state.width, 1)
    input_planes = np.array([[b] for b in inputs.bits()], dtype=bool).reshape(inputs.width, 1)
    next_planes, out_planes = evaluate_many(netlist, state_planes, input_planes)
    next_state = BitVector.from_bits(int(b) for b in next_planes[:, 0])
    outputs = BitVector.from_bits(int(b) for b in out_planes[:, 0])
    return next_state, outputs


def pack_planes(planes: np.ndarray) -> np.ndarray:
    """Pack bool bit planes (B, N) into uint32 values (N,), row 0 = bit 0."""
    width = planes.shape[0]
    if width > 32:
        raise WidthMismatchError(f"cannot pack {width} bits into uint32")
    out = np.zeros(planes.shape[1], dtype=np.uint32)
    for j in range(width):
        out |= planes[j].astype(np.uint32) << np.uint32(j)
    return out


def unpack_values(values: np.ndarray, width: int) -> np.ndarray:
    """Unpack uint values (N,) into bool bit planes (width, N)."""
    out = np.zeros((width, len(values)), dtype=bool)
    v = np.asarray(values, dtype=np.uint64)
    for j in range(width):
        out[j] = (v >> np.uint64(j)) & np.uint64(1) != 0
    return out
