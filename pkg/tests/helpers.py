"""Shared fixture builders and independent oracles.

The oracles here are deliberately dumb: dict/set breadth-first searches
and fixpoint loops over explicit edge tables, written without looking at
the library internals, so agreement is evidence rather than tautology.
"""

from collections import deque
from functools import lru_cache

import numpy as np

from fsmsafe import (
    AbstractFsm,
    emit_bench,
    gen_encoding,
    make_corrector,
    reencode,
    synthesize_netlist,
)

TOGGLE_BENCH = """\
OUTPUT(q)
q = DFF(nq)
nq = NOT(q)
"""

TWO_TOGGLE_BENCH = """\
OUTPUT(p)
OUTPUT(q)
p = DFF(np_)
np_ = NOT(p)
q = DFF(nq)
nq = NOT(q)
"""

RING3_BENCH = """\
OUTPUT(q0)
q0 = DFF(q2)
q1 = DFF(q0)
q2 = DFF(q1)
# init q0 1
"""


def mod10_fsm(input_width: int = 1) -> AbstractFsm:
    """Decade counter: id -> id+1 mod 10 when the count bit is set.

    input_width 0 gives the free-running variant.  Outputs are the 4-bit
    binary value of the id (bit 0 = output 0).
    """
    num_inputs = 1 << input_width
    delta = np.zeros((10, num_inputs), dtype=np.uint32)
    outputs = np.zeros((10, num_inputs), dtype=np.uint64)
    for s in range(10):
        for x in range(num_inputs):
            count = x & 1 if input_width else 1
            delta[s, x] = (s + 1) % 10 if count else s
            outputs[s, x] = s
    return AbstractFsm(
        num_states=10,
        input_width=input_width,
        delta=delta,
        outputs=outputs,
        output_width=4,
    )


def toggle_fsm() -> AbstractFsm:
    delta = np.array([[1], [0]], dtype=np.uint32)
    outputs = np.array([[0], [1]], dtype=np.uint64)
    return AbstractFsm(
        num_states=2, input_width=0, delta=delta, outputs=outputs, output_width=1
    )


@lru_cache(maxsize=None)
def counter_bench(scheme: str = "binary", with_corrector: bool = False) -> str:
    """Synthesized decade counter netlist text for one encoding scheme."""
    fsm = mod10_fsm()
    table = gen_encoding(scheme, fsm.num_states)
    corrector = make_corrector(table, fsm.default_id) if with_corrector else None
    tables = reencode(fsm, table, corrector)
    suffix = "_corr" if with_corrector else ""
    return emit_bench(synthesize_netlist(tables, name=f"mod10_{scheme}{suffix}"))


@lru_cache(maxsize=None)
def gray_probe_bench() -> str:
    """Gray decade counter plus an enable-gated observer flop.

    vis_d = AND(s1, s3) is 0 on every Gray codeword of ids 0..9 and 1 on
    the illegal words 10, 11, 14, 15; vis_en gates whether the observer
    flop latches it.  Exercises the held/exposed/masked verdicts.
    """
    fsm = mod10_fsm()
    silent = AbstractFsm(
        num_states=10,
        input_width=1,
        delta=fsm.delta,
        outputs=np.zeros((10, 2), dtype=np.uint64),
        output_width=0,
    )
    tables = reencode(silent, gen_encoding("gray", 10))
    text = emit_bench(synthesize_netlist(tables, name="gray_probe"))
    return text + (
        "INPUT(vis_en)\n"
        "OUTPUT(vis_q)\n"
        "vis_q = DFFE(vis_d, vis_en)\n"
        "vis_d = AND(s1, s3)\n"
    )


def hold_register_bench(width: int) -> str:
    """width flops that each hold their own value; no gates between them."""
    lines = ["INPUT(en)", "OUTPUT(h0)"]
    for i in range(width):
        lines.append(f"h{i} = DFFE(h{i}, en)")
    return "\n".join(lines) + "\n"


def wide_input_bench(num_flops: int, num_inputs: int) -> str:
    """One OR cone over many inputs feeding a small flop chain."""
    lines = [f"INPUT(x{i})" for i in range(num_inputs)]
    lines.append("OUTPUT(f0)")
    lines.append("mix = OR(" + ", ".join(f"x{i}" for i in range(num_inputs)) + ")")
    lines.append("f0 = DFF(fb)")
    for i in range(1, num_flops):
        lines.append(f"f{i} = DFF(f{i - 1})")
    lines.append(f"fb = XOR(f{num_flops - 1}, mix)")
    return "\n".join(lines) + "\n"


def brute_classify(edges: np.ndarray, legal: set):
    """Reference classification: (classes, min_depth, max_depth) dicts.

    classes values are the lowercase names.  Depth entries are None for
    infinity and absent for legal states.
    """
    num_states, num_inputs = edges.shape
    succ = [set(int(t) for t in edges[s]) for s in range(num_states)]

    # min depth: backward layers from the legal set (any-input shortest path)
    min_depth = {}
    layer = set(legal)
    seen = set(legal)
    d = 0
    while layer:
        d += 1
        nxt = set()
        for s in range(num_states):
            if s in seen:
                continue
            if succ[s] & layer:
                nxt.add(s)
                min_depth[s] = d
        seen |= nxt
        layer = nxt

    # states with some infinite legal-avoiding path: greatest fixpoint
    avoid = set(range(num_states)) - set(legal)
    changed = True
    while changed:
        changed = False
        for s in sorted(avoid):
            if not (succ[s] & avoid):
                avoid.discard(s)
                changed = True

    classes = {}
    max_depth = {}
    for s in range(num_states):
        if s in legal:
            classes[s] = "legal"
            continue
        if s not in seen:
            if succ[s] == {s}:
                classes[s] = "deadlock"
            else:
                classes[s] = "irrecoverable"
            min_depth[s] = None
            max_depth[s] = None
        elif s in avoid:
            classes[s] = "conditional"
            max_depth[s] = None
        else:
            classes[s] = "recoverable"

    # adversarial max depth over the recoverable region (acyclic there)
    rec = [s for s in range(num_states) if classes[s] == "recoverable"]
    pending = set(rec)
    while pending:
        for s in sorted(pending):
            vals = []
            ok = True
            for t in succ[s]:
                if t in legal:
                    vals.append(0)
                elif classes[t] == "recoverable":
                    if t in pending:
                        ok = False
                        break
                    vals.append(max_depth[t])
                else:
                    ok = False
                    break
            if ok:
                max_depth[s] = 1 + max(vals)
                pending.discard(s)
                break
        else:
            raise AssertionError("recoverable region not acyclic")
    return classes, min_depth, max_depth


def brute_reach_all(edges: np.ndarray, n: int, sources, budget: int):
    """(steps, upsets) of the cheapest witness to every state, or None.

    Product BFS over (state, upsets used), flips applied after the
    transition, minimizing steps first and upsets second.
    """
    num_states, num_inputs = edges.shape
    best = {int(s): (0, 0) for s in sources}
    frontier = {(int(s), 0) for s in sources}
    seen = set(frontier)
    steps = 0
    while frontier:
        steps += 1
        nxt = set()
        for s, u in frontier:
            for x in range(num_inputs):
                t = int(edges[s, x])
                if (t, u) not in seen:
                    seen.add((t, u))
                    nxt.add((t, u))
                if u < budget:
                    for f in range(n):
                        tf = t ^ (1 << f)
                        if (tf, u + 1) not in seen:
                            seen.add((tf, u + 1))
                            nxt.add((tf, u + 1))
        for s, u in nxt:
            cur = best.get(s)
            if cur is None:
                best[s] = (steps, u)
            elif cur[0] == steps and u < cur[1]:
                best[s] = (steps, u)
        frontier = nxt
    return best


def random_edges(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    return rng.integers(0, 1 << n, size=(1 << n, 1 << m), dtype=np.uint32)
