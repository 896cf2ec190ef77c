import pathlib

import pytest

from fsmsafe import (
    classify_states,
    cluster_registers,
    compute_legal_set,
    build_register_graph,
    enumerate_stg,
    extract_candidate,
    feedback_groups,
    parse_bench,
)

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def s298_text() -> str:
    return (FIXTURES / "s298.bench").read_text()


@pytest.fixture(scope="session")
def s298_netlist(s298_text):
    return parse_bench(s298_text, name="s298")


@pytest.fixture(scope="session")
def s298_groups(s298_netlist):
    graph = build_register_graph(s298_netlist)
    return graph, cluster_registers(graph)


@pytest.fixture(scope="session")
def s298_candidate(s298_netlist, s298_groups):
    graph, groups = s298_groups
    return extract_candidate(s298_netlist, feedback_groups(graph, groups)[0])


@pytest.fixture(scope="session")
def s298_stg(s298_candidate):
    return classify_states(compute_legal_set(enumerate_stg(s298_candidate)))
