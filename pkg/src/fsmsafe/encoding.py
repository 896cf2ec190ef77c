"""State encodings, error correctors, and FSM re-encoding.

Supported schemes: binary, gray (reflected), onehot, hamming3 (systematic
Hamming(7,4): data bits d1..d4 are the state id bits, parity bits
p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4).

reencode turns an AbstractFsm plus a table (and optional corrector) into
full truth tables over the encoded state bits, ready for synthesis.  A
corrector applies before the transition: next = enc(delta(dec(correct(w)),
input)).  Without a corrector, a non-codeword word falls straight to
encode(default_id), the "default case" of a case-statement FSM; its output
row is lambda(default_id, input) so the table stays total.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    CapacityExceededError,
    DistanceTooSmallError,
    LegalSetMissingError,
    UnsupportedSizeError,
)

SCHEMES = ("binary", "gray", "onehot", "hamming3")


@dataclass(frozen=True)
class AbstractFsm:
    """Encoding-free FSM over state ids 0..num_states-1.

    delta: (S, 2^m) array of successor ids.  outputs: (S, 2^m) array of
    packed output values, output_width bits each (bit 0 = first output).
    default_id is where uncorrectable/unused words land after re-encoding.
    """

    num_states: int
    input_width: int
    delta: np.ndarray
    outputs: np.ndarray
    output_width: int
    reset_id: int = 0
    default_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=np.uint32))
        object.__setattr__(self, "outputs", np.asarray(self.outputs, dtype=np.uint64))
        shape = (self.num_states, 1 << self.input_width)
        if self.delta.shape != shape or self.outputs.shape != shape:
            raise ValueError(f"tables must have shape {shape}")
        if self.delta.size and int(self.delta.max()) >= self.num_states:
            raise ValueError("delta successor out of range")
        if not (0 <= self.reset_id < self.num_states and 0 <= self.default_id < self.num_states):
            raise ValueError("reset_id/default_id out of range")


@dataclass(frozen=True)
class EncodingTable:
    scheme: str
    width: int
    codewords: tuple  # state id -> word

    def __post_init__(self):
        if len(set(self.codewords)) != len(self.codewords):
            raise ValueError("codewords must be distinct")
        for w in self.codewords:
            if not 0 <= w < (1 << self.width):
                raise ValueError(f"codeword {w} wider than {self.width} bits")

    @property
    def num_states(self) -> int:
        return len(self.codewords)

    def encode(self, state_id: int) -> int:
        return self.codewords[state_id]

    def decode(self, word: int):
        """State id for an exact codeword, else None."""
        try:
            return self.codewords.index(word)
        except ValueError:
            return None


def gen_encoding(scheme: str, num_states: int) -> EncodingTable:
    """Deterministic encoding table for the given scheme.

    binary/gray width = ceil(log2 S); onehot width = S; hamming3 width = 7
    (UnsupportedSize above 16 states).
    """
    scheme = scheme.lower()
    if num_states < 2:
        raise UnsupportedSizeError("need at least 2 states")
    if scheme == "binary":
        width = (num_states - 1).bit_length()
        words = tuple(range(num_states))
    elif scheme == "gray":
        width = (num_states - 1).bit_length()
        words = tuple(k ^ (k >> 1) for k in range(num_states))
    elif scheme == "onehot":
        width = num_states
        words = tuple(1 << k for k in range(num_states))
    elif scheme == "hamming3":
        if num_states > 16:
            raise UnsupportedSizeError(
                f"hamming3 hosts at most 16 states, asked for {num_states}"
            )
        width = 7
        words = tuple(_hamming74(k) for k in range(num_states))
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return EncodingTable(scheme, width, words)


def _hamming74(value: int) -> int:
    d1, d2, d3, d4 = (value >> 0) & 1, (value >> 1) & 1, (value >> 2) & 1, (value >> 3) & 1
    p1 = d1 ^ d2 ^ d4
    p2 = d1 ^ d3 ^ d4
    p3 = d2 ^ d3 ^ d4
    return value | (p1 << 4) | (p2 << 5) | (p3 << 6)


def min_distance(table: EncodingTable) -> int:
    """Exact minimum pairwise Hamming distance, brute force."""
    if table.num_states < 2:
        raise ValueError("need at least 2 codewords")
    return min(
        bin(a ^ b).count("1") for a, b in combinations(table.codewords, 2)
    )


@dataclass(frozen=True)
class CorrectorSpec:
    """Nearest-codeword corrector with default fallback.

    map[word] is the codeword of the unique state within ``radius``, or the
    default codeword when no codeword is that close.  fallback[word] marks
    the latter case (miscorrections map to a wrong codeword with fallback
    False; they are reported, not hidden).
    """

    table: EncodingTable
    default_id: int
    radius: int
    map: np.ndarray       # (2^w,) uint32 word -> codeword
    fallback: np.ndarray  # (2^w,) bool

    def correct(self, word: int) -> int:
        return int(self.map[word])

    def corrected_id(self, word: int) -> int:
        return self.table.decode(int(self.map[word]))


def make_corrector(table: EncodingTable, default_id: int = 0) -> CorrectorSpec:
    """Radius floor((d-1)/2) corrector; DistanceTooSmall when d < 3."""
    d = min_distance(table)
    if d < 3:
        raise DistanceTooSmallError(f"min distance {d} < 3, cannot correct")
    radius = (d - 1) // 2
    size = 1 << table.width
    mapping = np.full(size, table.codewords[default_id], dtype=np.uint32)
    fallback = np.ones(size, dtype=bool)
    for cw in table.codewords:
        for flips in range(radius + 1):
            for bits in combinations(range(table.width), flips):
                word = cw
                for b in bits:
                    word ^= 1 << b
                mapping[word] = cw
                fallback[word] = False
    return CorrectorSpec(table, default_id, radius, mapping, fallback)


@dataclass(frozen=True)
class EncodedTables:
    """Truth tables of a re-encoded FSM over w state bits and m input bits."""

    width: int
    input_width: int
    output_width: int
    next_words: np.ndarray  # (2^w, 2^m) uint32
    outputs: np.ndarray     # (2^w, 2^m) uint64 packed
    reset_word: int
    table: EncodingTable


def reencode(fsm: AbstractFsm, table: EncodingTable, corrector: CorrectorSpec | None = None) -> EncodedTables:
    """Expand the abstract FSM into total truth tables over the encoding."""
    if table.num_states < fsm.num_states:
        raise ValueError(
            f"table has {table.num_states} codewords, FSM has {fsm.num_states} states"
        )
    size = 1 << table.width
    num_inputs = 1 << fsm.input_width
    next_words = np.empty((size, num_inputs), dtype=np.uint32)
    outputs = np.empty((size, num_inputs), dtype=np.uint64)
    enc = np.array([table.codewords[i] for i in range(fsm.num_states)], dtype=np.uint32)
    for word in range(size):
        if corrector is not None:
            sid = table.decode(int(corrector.map[word]))
            if sid is None or sid >= fsm.num_states:
                sid = fsm.default_id
            next_words[word] = enc[fsm.delta[sid]]
            outputs[word] = fsm.outputs[sid]
        else:
            sid = table.decode(word)
            if sid is None or sid >= fsm.num_states:
                next_words[word] = enc[fsm.default_id]
                outputs[word] = fsm.outputs[fsm.default_id]
            else:
                next_words[word] = enc[fsm.delta[sid]]
                outputs[word] = fsm.outputs[sid]
    return EncodedTables(
        width=table.width,
        input_width=fsm.input_width,
        output_width=fsm.output_width,
        next_words=next_words,
        outputs=outputs,
        reset_word=table.codewords[fsm.reset_id],
        table=table,
    )


def extract_abstract(stg) -> AbstractFsm:
    """Project an analyzed Stg onto its legal states.

    Legal states become ids 0..S-1 in ascending raw-state order.  Outputs
    come from the candidate's output-target values (data values; hold
    semantics are an analysis concern, not a re-encoding concern); without
    a candidate the FSM has zero-width outputs.  reset_id and default_id
    are the id of the (smallest) reset state.
    """
    if stg.legal is None:
        raise LegalSetMissingError("legal set not computed")
    legal = sorted(stg.legal)
    if len(legal) > (1 << 16):
        raise CapacityExceededError(f"{len(legal)} legal states exceed the 2^16 cap")
    index = {s: k for k, s in enumerate(legal)}
    num_inputs = stg.num_inputs
    raw = np.array(legal, dtype=np.uint32)
    delta = np.empty((len(legal), num_inputs), dtype=np.uint32)
    for i in range(num_inputs):
        delta[:, i] = [index[int(t)] for t in stg.edges[raw, i]]

    cand = stg.candidate
    if cand is not None and cand.targets:
        width = len(cand.targets)
        if width > 63:
            raise CapacityExceededError(f"{width} output targets exceed packing width")
        outputs = np.zeros((len(legal), num_inputs), dtype=np.uint64)
        for i in range(num_inputs):
            vals, _ = cand.eval_targets_many(raw, np.full(len(legal), i, dtype=np.uint32))
            packed = np.zeros(len(legal), dtype=np.uint64)
            for t in range(width):
                packed |= vals[t].astype(np.uint64) << np.uint64(t)
            outputs[:, i] = packed
    else:
        width = 0
        outputs = np.zeros((len(legal), num_inputs), dtype=np.uint64)

    reset = min(s for s in stg.reset_states if s in index)
    return AbstractFsm(
        num_states=len(legal),
        input_width=stg.m,
        delta=delta,
        outputs=outputs,
        output_width=width,
        reset_id=index[reset],
        default_id=index[reset],
    )


def write_encoding_table(table: EncodingTable) -> str:
    """One line per state: `<id> <binary codeword>`."""
    lines = [
        f"{i} {format(w, f'0{table.width}b')}" for i, w in enumerate(table.codewords)
    ]
    return "\n".join(lines) + "\n"


def parse_encoding_table(text: str) -> EncodingTable:
    entries = {}
    width = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit() or set(parts[1]) - {"0", "1"}:
            raise ValueError(f"table line {line_no}: expected `<id> <binary>`")
        sid = int(parts[0])
        if width is None:
            width = len(parts[1])
        elif len(parts[1]) != width:
            raise ValueError(f"table line {line_no}: inconsistent width")
        if sid in entries:
            raise ValueError(f"table line {line_no}: duplicate id {sid}")
        entries[sid] = int(parts[1], 2)
    if not entries or sorted(entries) != list(range(len(entries))):
        raise ValueError("table must cover ids 0..S-1 exactly")
    return EncodingTable("imported", width, tuple(entries[i] for i in range(len(entries))))
