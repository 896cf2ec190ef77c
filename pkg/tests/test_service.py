"""HTTP API surface: request/response contracts and error mapping."""

import json

import pytest
from fastapi.testclient import TestClient

from fsmsafe import gen_encoding, parse_bench, write_encoding_table
from fsmsafe.service import create_app
from helpers import TOGGLE_BENCH, counter_bench, hold_register_bench


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def s298(s298_text):
    return s298_text


def test_health(client):
    r = client.get("/v1/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["version"]


def test_extract(client, s298):
    r = client.post("/v1/extract", json={"bench": s298, "name": "s298"})
    assert r.status_code == 200
    body = r.json()
    assert body["netlist"] == {
        "name": "s298", "inputs": 3, "outputs": 6, "flops": 14, "gates": 51,
    }
    assert body["theta"] == 0.5
    assert body["groups"][0]["flops"] == [0, 1, 2, 3, 4]
    assert body["groups"][0]["feedback"] is True
    assert body["groups"][0]["flop_nets"] == ["G10", "G11", "G12", "G13", "G14"]
    feedback = [g["flops"] for g in body["groups"] if g["feedback"]]
    assert feedback == [[0, 1, 2, 3, 4], [7]]


def test_stg_defaults_to_first_feedback_group(client, s298):
    r = client.post("/v1/stg", json={"bench": s298})
    assert r.status_code == 200
    body = r.json()
    assert body["candidate"]["n"] == 5
    assert body["candidate"]["state_nets"] == ["G10", "G11", "G12", "G13", "G14"]
    assert body["legal"] == [0, 2, 4, 6, 8, 17, 19, 21, 23, 25]
    assert body["counts"]["irrecoverable"] == 16
    assert body["worst_recovery_depth"] == 6
    assert len(body["classes"]) == 32
    assert [lp["kind"] for lp in body["loops"]] == ["trap"]


def test_stg_group_by_names(client, s298):
    r = client.post("/v1/stg", json={"bench": s298, "group": ["G10", "G11", "G12", "G13", "G14"]})
    assert r.status_code == 200
    assert r.json()["candidate"]["group"] == [0, 1, 2, 3, 4]


def test_stg_with_reset_override(client, s298):
    r = client.post("/v1/stg", json={"bench": s298, "reset": ["00001"]})
    assert r.status_code == 200
    body = r.json()
    assert body["candidate"]["reset_states"] == [1]
    assert body["counts"]["legal"] == 16  # the trap loop is its own closure
    r = client.post("/v1/stg", json={"bench": s298, "reset": [2, 4]})
    assert r.status_code == 200
    assert r.json()["candidate"]["reset_states"] == [2, 4]


def test_seu(client, s298):
    r = client.post("/v1/seu", json={"bench": s298, "k": 1, "include_events": True})
    assert r.status_code == 200
    body = r.json()
    assert body["counts"]["events"] == 50
    assert body["counts"]["legal_jump"] == 20
    assert body["counts"]["irrecoverable"] == 30
    assert body["exposure"] == {"held": 0, "exposed": 24, "masked": 232}
    assert len(body["events"]) == 50
    first = body["events"][0]
    assert first["origin"] == 0 and first["mask"] == 1
    assert first["state_class"] in (
        "legal", "recoverable", "conditional", "irrecoverable", "deadlock",
    )


def test_seu_events_limit(client, s298):
    r = client.post(
        "/v1/seu", json={"bench": s298, "include_events": True, "events_limit": 5}
    )
    assert len(r.json()["events"]) == 5
    r = client.post("/v1/seu", json={"bench": s298})
    assert r.json()["events"] is None


def test_seu_k_too_large(client, s298):
    r = client.post("/v1/seu", json={"bench": s298, "k": 9})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"


def test_seu_with_corrector_table(client):
    bench = counter_bench("hamming3", with_corrector=True)
    table = write_encoding_table(gen_encoding("hamming3", 10))
    r = client.post(
        "/v1/seu",
        json={"bench": bench, "group": list(range(7)), "k": 1, "table": table,
              "include_events": True, "events_limit": 3},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["counts"]["corrected"] == 70
    assert all(e["correction"] == "corrected" for e in body["events"])


def test_reach_witness(client, s298):
    r = client.post("/v1/reach", json={"bench": s298, "target": 10, "budget": 1})
    assert r.status_code == 200
    body = r.json()
    assert body["reachable"] is True
    assert body["steps"] == 2 and body["upsets"] == 1
    assert body["final_state"] == 10
    assert body["witness"][-1]["seu_flip"] == 3
    assert body["vectors_csv"].splitlines()[0].startswith("cycle,")


def test_reach_unreachable(client, s298):
    r = client.post("/v1/reach", json={"bench": s298, "target": 10, "budget": 0})
    assert r.status_code == 200
    body = r.json()
    assert body == {
        "reachable": False, "steps": None, "upsets": None,
        "final_state": None, "witness": None, "vectors_csv": None,
    }


def test_reach_rejects_negative_budget(client, s298):
    r = client.post("/v1/reach", json={"bench": s298, "target": 1, "budget": -1})
    assert r.status_code == 422  # schema-level validation


def test_reencode(client, s298):
    r = client.post("/v1/reencode", json={"bench": s298, "scheme": "gray"})
    assert r.status_code == 200
    body = r.json()
    assert body["scheme"] == "gray"
    assert body["width"] == 4
    assert body["min_distance"] == 1
    assert body["corrector"] is False
    assert body["num_states"] == 10
    nl = parse_bench(body["bench"])
    assert len(nl.flops) == 4
    assert len(body["table"].splitlines()) == 10


def test_reencode_unknown_scheme(client, s298):
    r = client.post("/v1/reencode", json={"bench": s298, "scheme": "morse"})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"


def test_export(client, s298):
    r = client.post("/v1/export", json={"bench": s298})
    assert r.status_code == 200
    body = r.json()
    assert body["dot"].startswith("digraph stg {")
    assert body["graphml"].startswith("<?xml")
    report = json.loads(body["report"])
    assert report["counts"]["legal"] == 10
    assert report["seu"]["events"] == 50


def test_analyze(client, s298):
    r = client.post("/v1/analyze", json={"bench": s298, "name": "s298"})
    assert r.status_code == 200
    body = r.json()
    assert [g["flops"] for g in body["groups"] if g["feedback"]] == [[0, 1, 2, 3, 4], [7]]
    assert len(body["candidates"]) == 2
    first = body["candidates"][0]
    assert first["skipped"] is None
    assert first["n"] == 5
    assert first["has_trap"] is True
    assert first["worst_recovery_depth"] == 6
    assert first["seu"]["events"] == 50
    assert first["exposure"]["exposed"] == 24
    assert json.loads(first["report"])["counts"]["legal"] == 10
    assert first["dot"].startswith("digraph")


def test_analyze_explicit_groups(client, s298):
    r = client.post(
        "/v1/analyze",
        json={"bench": s298, "groups": [["G10", "G11", "G12", "G13", "G14"]], "seu_k": 2},
    )
    assert r.status_code == 200
    body = r.json()
    assert len(body["candidates"]) == 1
    assert body["candidates"][0]["seu"]["events"] == 100


def test_analyze_skips_oversized_groups(client):
    r = client.post(
        "/v1/analyze",
        json={"bench": hold_register_bench(21), "groups": [list(range(21))]},
    )
    assert r.status_code == 200
    cand = r.json()["candidates"][0]
    assert cand["skipped"]
    assert cand["n"] is None


def test_parse_error_kind(client):
    r = client.post("/v1/extract", json={"bench": "INPUT(a)\nOUTPUT(q)\nq = AND(a)\n"})
    assert r.status_code == 400
    detail = r.json()["detail"]
    assert detail["kind"] == "parse"
    assert "AND" in detail["message"]


def test_capacity_error_kind(client):
    r = client.post(
        "/v1/stg", json={"bench": hold_register_bench(21), "group": list(range(21))}
    )
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "capacity"


def test_usage_error_kind(client, s298):
    r = client.post(
        "/v1/stg", json={"bench": s298, "group": [0, 1], "group_index": 0}
    )
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"
    r = client.post("/v1/stg", json={"bench": s298, "theta": 1.5})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"
    r = client.post("/v1/stg", json={"bench": s298, "reset": ["0101"]})  # wrong width
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"


def test_validation_error_kind(client, s298):
    r = client.post("/v1/stg", json={"bench": s298, "legal_states": [0, 1]})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "validation"


def test_group_index_out_of_range(client, s298):
    r = client.post("/v1/stg", json={"bench": s298, "group_index": 99})
    assert r.status_code == 400
    assert r.json()["detail"]["kind"] == "usage"


def test_toggle_end_to_end(client):
    r = client.post("/v1/stg", json={"bench": TOGGLE_BENCH, "group": [0]})
    assert r.status_code == 200
    body = r.json()
    assert body["counts"] == {
        "legal": 2, "recoverable": 0, "conditional": 0,
        "irrecoverable": 0, "deadlock": 0,
    }
