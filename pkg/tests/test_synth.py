"""Truth-table synthesis, netlist emission, and stimulus vectors."""

import numpy as np
import pytest

from fsmsafe import (
    AbstractFsm,
    BitVector,
    ReachQuery,
    WitnessStep,
    WitnessTrace,
    check_reachable,
    classify_states,
    compute_legal_set,
    emit_bench,
    emit_vectors,
    enumerate_stg,
    evaluate_cycle,
    extract_candidate,
    gen_encoding,
    parse_bench,
    reencode,
    synthesize_netlist,
)
from fsmsafe.encoding import SCHEMES
from fsmsafe.errors import CapacityExceededError, EmptyNetlistError, TraceMismatchError
from fsmsafe.synth import SopCover, cover_from_truth
from helpers import counter_bench, mod10_fsm, toggle_fsm


def test_sop_cover_matches_truth_table():
    truth = [0, 1, 1, 0, 1, 0, 0, 1]  # 3-input XOR
    cover = cover_from_truth(truth, 3)
    for row in range(8):
        assert cover.evaluate(row) == truth[row]


def test_toggle_synthesis():
    tables = reencode(toggle_fsm(), gen_encoding("binary", 2))
    nl = synthesize_netlist(tables, name="toggle")
    assert len(nl.flops) == 1
    assert len(nl.inputs) == 0
    text = emit_bench(nl)
    assert "INPUT" not in text
    assert "OUTPUT(" in text and "DFF(" in text
    back = parse_bench(text)
    state = back.reset_state()
    seen = []
    for _ in range(4):
        seen.append(int(state))
        state, outs = evaluate_cycle(back, state, BitVector(0, 0))
        assert outs.bit(0) == seen[-1]
    assert seen == [0, 1, 0, 1]


@pytest.mark.parametrize("scheme", SCHEMES)
def test_synthesized_netlist_matches_the_tables(scheme):
    fsm = mod10_fsm()
    table = gen_encoding(scheme, 10)
    tables = reencode(fsm, table)
    nl = parse_bench(emit_bench(synthesize_netlist(tables, name=f"m_{scheme}")))
    cand = extract_candidate(nl, tuple(range(table.width)))
    stg = enumerate_stg(cand)
    assert stg.edges.tolist() == tables.next_words.tolist()
    vals, _ = cand.eval_targets_many(
        np.repeat(np.arange(1 << table.width), 2),
        np.tile(np.arange(2), 1 << table.width),
    )
    packed = sum(vals[t].astype(np.uint64) << np.uint64(t) for t in range(4))
    assert packed.reshape(-1, 2).tolist() == tables.outputs.tolist()


def test_emitted_text_is_deterministic_and_ordered():
    text = counter_bench("gray")
    assert text == counter_bench.__wrapped__("gray", False)
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    kinds = []
    for line in lines:
        if line.startswith("INPUT("):
            kinds.append("i")
        elif line.startswith("OUTPUT("):
            kinds.append("o")
        elif "DFF" in line.split("=", 1)[1]:
            kinds.append("f")
        else:
            kinds.append("g")
    assert kinds == sorted(kinds, key="iofg".index)


def test_gates_are_emitted_in_topological_order():
    text = counter_bench("binary")
    nl = parse_bench(text)
    defined = {nl.net_name(i) for i in nl.inputs}
    defined |= {nl.net_name(f.output) for f in nl.flops}
    for line in text.splitlines():
        if "=" in line and "DFF" not in line:
            target, expr = [part.strip() for part in line.split("=", 1)]
            args = expr[expr.index("(") + 1 : expr.rindex(")")].split(",")
            for arg in (a.strip() for a in args):
                assert arg in defined, f"{arg} used before defined"
            defined.add(target)


def test_s298_roundtrip(s298_text, s298_netlist):
    back = parse_bench(emit_bench(s298_netlist))
    nl = s298_netlist
    assert [back.net_name(i) for i in back.inputs] == [nl.net_name(i) for i in nl.inputs]
    assert [back.net_name(i) for i in back.outputs] == [nl.net_name(i) for i in nl.outputs]
    assert len(back.gates) == len(nl.gates)
    assert len(back.flops) == len(nl.flops)

    def shape(netlist):
        gates = {
            netlist.net_name(g.output): (g.kind, tuple(netlist.net_name(i) for i in g.inputs))
            for g in netlist.gates
        }
        flops = {
            netlist.net_name(f.output): (
                f.kind,
                netlist.net_name(f.data),
                None if f.enable is None else netlist.net_name(f.enable),
                f.init,
            )
            for f in netlist.flops
        }
        return gates, flops

    assert shape(back) == shape(nl)


def test_init_pragma_roundtrip():
    fsm = mod10_fsm()
    table = gen_encoding("binary", 10)
    shifted = AbstractFsm(
        num_states=10,
        input_width=1,
        delta=fsm.delta,
        outputs=fsm.outputs,
        output_width=4,
        reset_id=5,
    )
    text = emit_bench(synthesize_netlist(reencode(shifted, table), name="r5"))
    assert "# init s0 1" in text and "# init s2 1" in text  # reset word 0101
    back = parse_bench(text)
    assert int(back.reset_state()) == 5


def test_emit_refuses_empty_netlist():
    with pytest.raises(EmptyNetlistError):
        emit_bench(parse_bench("# just a comment\n"))


def test_synthesis_capacity_cap():
    size = 1 << 11
    fsm = AbstractFsm(
        num_states=10,
        input_width=11,
        delta=np.zeros((10, size), dtype=np.uint32),
        outputs=np.zeros((10, size), dtype=np.uint64),
        output_width=0,
    )
    tables = reencode(fsm, gen_encoding("onehot", 10))
    with pytest.raises(CapacityExceededError):
        synthesize_netlist(tables)


@pytest.fixture(scope="module")
def counter_candidate():
    nl = parse_bench(counter_bench("binary"))
    return extract_candidate(nl, tuple(range(4)))


@pytest.fixture(scope="module")
def counter_stg(counter_candidate):
    return classify_states(compute_legal_set(enumerate_stg(counter_candidate)))


def test_vectors_for_the_upset_witness(counter_stg, counter_candidate):
    trace = check_reachable(counter_stg, ReachQuery(target=15, budget=1))
    text = emit_vectors(trace, counter_candidate)
    lines = text.splitlines()
    assert lines[0] == "cycle,in0,s0,s1,s2,s3,seu_bit"
    assert len(lines) == 8  # header + 7 steps
    last = lines[-1].split(",")
    assert last[0] == "6"
    assert last[2:6] == ["1", "1", "1", "1"]  # state 15 after the flip
    assert last[6] == "3"
    for row in lines[1:-1]:
        assert row.endswith(",")  # no flip on the straight count
    assert text.endswith("\n")


def test_vectors_empty_trace(counter_candidate):
    text = emit_vectors(WitnessTrace(steps=(), final_state=0), counter_candidate)
    assert text == "cycle,in0,s0,s1,s2,s3,seu_bit\n"


def test_vectors_reject_tampered_traces(counter_stg, counter_candidate):
    trace = check_reachable(counter_stg, ReachQuery(target=15, budget=1))
    bad = WitnessTrace(steps=trace.steps, final_state=14)
    with pytest.raises(TraceMismatchError):
        emit_vectors(bad, counter_candidate)
    bad2 = WitnessTrace(
        steps=(trace.steps[0], trace.steps[0]) + trace.steps[2:],
        final_state=trace.final_state,
    )
    with pytest.raises(TraceMismatchError):
        emit_vectors(bad2, counter_candidate)


def test_trap_trajectory_counter_bits(s298_stg, s298_candidate):
    """After the flip the counter runs 1010, 1011, ... through the trap.

    The upset lands while the machine sits in counter state 2: the step
    into 2 carries the flip of the counter MSB, and the machine is then
    clocked six more times.
    """
    steps = [WitnessStep(0, 0, None), WitnessStep(17, 0, 3)]
    cur = 10
    for _ in range(6):
        steps.append(WitnessStep(cur, 0, None))
        cur = int(s298_stg.edges[cur, 0])
    trace = WitnessTrace(steps=tuple(steps), final_state=cur)
    text = emit_vectors(trace, s298_candidate)
    rows = text.splitlines()[1:]
    counters = []
    for row in rows:
        cells = row.split(",")
        bits = [int(b) for b in cells[5:9]]
        counters.append(sum(b << i for i, b in enumerate(bits)))
    assert counters == [1, 10, 11, 12, 13, 14, 15, 0]
