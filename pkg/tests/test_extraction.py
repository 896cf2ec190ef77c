"""Register clustering and FSM candidate extraction."""

import numpy as np
import pytest

from fsmsafe import (
    BitVector,
    build_register_graph,
    cluster_registers,
    evaluate_cycle,
    extract_candidate,
    feedback_groups,
    parse_bench,
)
from fsmsafe.errors import EmptyGroupError
from fsmsafe.extraction import ConeEvaluator, parse_group_file
from helpers import RING3_BENCH, TWO_TOGGLE_BENCH, TOGGLE_BENCH


def test_s298_clustering(s298_groups):
    _, groups = s298_groups
    assert groups[0] == (0, 1, 2, 3, 4)
    assert groups[1:] == [(i,) for i in range(5, 14)]


def test_s298_feedback_groups(s298_groups):
    graph, groups = s298_groups
    fb = feedback_groups(graph, groups)
    assert fb == [(0, 1, 2, 3, 4), (7,)]


def test_s298_candidate_shape(s298_candidate):
    cand = s298_candidate
    assert (cand.n, cand.m) == (5, 4)
    assert cand.state_net_names == ("G10", "G11", "G12", "G13", "G14")
    assert cand.control_net_names == ("G2", "G15", "G16", "G17")
    assert cand.reset_value() == 0
    assert [(t.label, t.role) for t in cand.targets] == [
        (f"G{i}", "ff-data") for i in range(18, 24)
    ]


def test_whole_netlist_group_controls_are_the_primary_inputs(s298_netlist):
    cand = extract_candidate(s298_netlist, tuple(range(14)))
    assert cand.control_net_names == ("G0", "G1", "G2")
    assert cand.n == 14 and cand.m == 3


def test_single_toggle_candidate():
    nl = parse_bench(TOGGLE_BENCH)
    cand = extract_candidate(nl, (0,))
    assert (cand.n, cand.m) == (1, 0)
    assert cand.eval_next(0, 0) == 1
    assert cand.eval_next(1, 0) == 0


def test_independent_toggles_stay_separate():
    nl = parse_bench(TWO_TOGGLE_BENCH)
    graph = build_register_graph(nl)
    groups = cluster_registers(graph)
    assert groups == [(0,), (1,)]
    assert feedback_groups(graph, groups) == [(0,), (1,)]


def test_ring_is_one_scc_group():
    nl = parse_bench(RING3_BENCH)
    graph = build_register_graph(nl)
    assert cluster_registers(graph) == [(0, 1, 2)]


def test_cross_coupled_pair_groups_despite_zero_jaccard():
    # supports are disjoint ({q1} vs {q0}) so the weight is 0, but the
    # two flops form an SCC and must seed one group
    nl = parse_bench("OUTPUT(q0)\nq0 = DFF(n1)\nn1 = NOT(q1)\nq1 = DFF(q0)\n")
    graph = build_register_graph(nl)
    assert graph.weight(0, 1) == 0.0
    assert graph.feeds(0, 1) and graph.feeds(1, 0)
    assert cluster_registers(graph) == [(0, 1)]


def test_theta_is_monotone_on_s298(s298_groups):
    graph, _ = s298_groups

    def key(theta):
        return sorted(cluster_registers(graph, theta))

    partitions = [key(t) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
    for coarse, fine in zip(partitions, partitions[1:]):
        blocks = {g: next(c for c in coarse if set(g) <= set(c)) for g in fine}
        assert all(set(g) <= set(c) for g, c in blocks.items())
        assert len(fine) >= len(coarse)


def test_register_graph_weights_are_jaccard(s298_groups):
    graph, _ = s298_groups
    assert 0.0 <= graph.weight(0, 1) <= 1.0
    assert graph.weight(0, 1) == graph.weight(1, 0)
    assert graph.weight(2, 2) == 1.0


def test_projection_soundness_on_s298(s298_netlist, s298_candidate):
    """Cone evaluation agrees with whole-netlist simulation.

    The candidate sees only its 5 state bits plus the 4 control nets;
    feeding it the control values observed in a full simulation must
    reproduce the full simulation's next group state.
    """
    nl, cand = s298_netlist, s298_candidate
    pi_index = {nl.net_name(n): i for i, n in enumerate(nl.inputs)}
    ff_index = {nl.net_name(f.output): i for i, f in enumerate(nl.flops)}
    rng = np.random.default_rng(298)
    for _ in range(1000):
        full = int(rng.integers(0, 1 << 14))
        inp = int(rng.integers(0, 1 << 3))
        state = BitVector(14, full)
        inputs = BitVector(3, inp)
        nxt, _ = evaluate_cycle(nl, state, inputs)
        ctrl = 0
        for pos, name in enumerate(cand.control_net_names):
            if name in pi_index:
                bit = inputs.bit(pi_index[name])
            else:
                bit = state.bit(ff_index[name])
            ctrl |= bit << pos
        group_state = sum(state.bit(i) << pos for pos, i in enumerate(cand.flop_indices))
        want = sum(nxt.bit(i) << pos for pos, i in enumerate(cand.flop_indices))
        assert cand.eval_next(group_state, ctrl) == want


def test_dffe_ring_holds_without_enable():
    nl = parse_bench(
        "INPUT(en)\nOUTPUT(q0)\n"
        "q0 = DFFE(q2, en)\nq1 = DFFE(q0, en)\nq2 = DFFE(q1, en)\n"
        "# init q0 1\n"
    )
    cand = extract_candidate(nl, (0, 1, 2))
    assert cand.reset_value() == 1
    for s in range(8):
        assert cand.eval_next(s, 0) == s
        rotated = ((s << 1) | (s >> 2)) & 7
        assert cand.eval_next(s, 1) == rotated


def test_group_file_parsing(s298_netlist):
    text = "# core\nG12\nG10  # first\nG11\nG10\n"
    assert parse_group_file(s298_netlist, text) == (0, 1, 2)
    with pytest.raises(ValueError):
        parse_group_file(s298_netlist, "G999\n")
    with pytest.raises(ValueError):
        parse_group_file(s298_netlist, "G30\n")  # a gate net, not a flop


def test_candidate_group_errors(s298_netlist):
    with pytest.raises(EmptyGroupError):
        extract_candidate(s298_netlist, ())
    with pytest.raises(ValueError):
        extract_candidate(s298_netlist, (0, 99))


def test_cone_evaluator_rejects_escaping_cone():
    nl = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(x)\nx = AND(a, b)\n")
    with pytest.raises(ValueError):
        ConeEvaluator(nl, [nl.net_id("a")], [nl.net_id("x")])


def test_phase_singleton_candidate(s298_netlist, s298_groups):
    graph, groups = s298_groups
    cand = extract_candidate(s298_netlist, feedback_groups(graph, groups)[1])
    assert (cand.n, cand.m) == (1, 7)
    assert cand.state_net_names == ("G17",)
