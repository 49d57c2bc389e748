from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlets.trace import (
    TraceParseError,
    index_trace,
    parse_trace,
    serialize_trace,
    validate_trace,
)

MINIMAL = [
    json.dumps(
        {
            "kind": "execution",
            "id": "eg",
            "operator": "example_gen",
            "pipeline_id": "p",
            "start_at": 1,
            "end_at": 2,
            "state": "complete",
            "cpu_cost": 1.0,
            "properties": {},
        }
    ),
    json.dumps(
        {
            "kind": "artifact",
            "id": "s",
            "type": "data_span",
            "created_at": 2,
            "pipeline_id": "p",
            "properties": {
                "span_stats": {
                    "features": [
                        {"name": "x", "type": "numerical", "hist": [0.1] * 10}
                    ]
                }
            },
        }
    ),
    json.dumps({"kind": "edge", "from": "eg", "to": "s", "role": "output"}),
]


def _exec(node_id, operator, start, end, pipeline="p", **props):
    return json.dumps(
        {
            "kind": "execution",
            "id": node_id,
            "operator": operator,
            "pipeline_id": pipeline,
            "start_at": start,
            "end_at": end,
            "state": "complete",
            "cpu_cost": 1.0,
            "properties": props,
        }
    )


def _artifact(node_id, a_type, created, pipeline="p"):
    return json.dumps(
        {
            "kind": "artifact",
            "id": node_id,
            "type": a_type,
            "created_at": created,
            "pipeline_id": pipeline,
            "properties": {},
        }
    )


def _edge(src, dst, role):
    return json.dumps({"kind": "edge", "from": src, "to": dst, "role": role})


def test_parse_minimal_file():
    trace = parse_trace(MINIMAL)
    assert len(trace.artifacts) == 1
    assert len(trace.executions) == 1
    assert len(trace.edges) == 1


def test_parse_rejects_swapped_edge_orientation():
    lines = MINIMAL[:2] + [_edge("s", "eg", "output")]
    with pytest.raises(TraceParseError, match="bipartite orientation"):
        parse_trace(lines)


def test_parse_rejects_duplicate_node_id():
    with pytest.raises(TraceParseError, match="duplicate node id"):
        parse_trace(MINIMAL + [MINIMAL[1]])


def test_parse_rejects_dangling_edge():
    with pytest.raises(TraceParseError, match="does not exist"):
        parse_trace(MINIMAL[:2] + [_edge("eg", "ghost", "output")])


def test_parse_reports_line_numbers():
    with pytest.raises(TraceParseError, match="line 2"):
        parse_trace([MINIMAL[0], "{broken"])


def test_parse_rejects_missing_timestamps():
    bad = json.loads(MINIMAL[0])
    del bad["end_at"]
    with pytest.raises(TraceParseError, match="end_at"):
        parse_trace([json.dumps(bad)])


def test_parse_order_independent():
    a = parse_trace(MINIMAL)
    b = parse_trace(list(reversed(MINIMAL)))
    assert a == b


def test_unknown_property_keys_survive_round_trips():
    record = json.loads(MINIMAL[0])
    record["properties"]["owner_team"] = "ranking"
    trace = parse_trace([json.dumps(record)] + MINIMAL[1:])
    again = parse_trace(list(serialize_trace(trace)))
    assert again == trace
    assert ("owner_team", "ranking") in again.executions["eg"].extra


def test_validate_clean_fixture(warm_pair_trace):
    assert validate_trace(warm_pair_trace) == []


def test_validate_flags_cycle():
    lines = [
        _exec("e1", "trainer", 1, 2, model_type="dnn"),
        _exec("e2", "evaluator", 3, 4),
        _artifact("m", "model", 2),
        _artifact("r", "eval_result", 4),
        _edge("e1", "m", "output"),
        _edge("m", "e2", "input"),
        _edge("e2", "r", "output"),
        _edge("r", "e1", "input"),
    ]
    violations = validate_trace(parse_trace(lines))
    assert any("cycle through" in v for v in violations)


def test_validate_flags_trainer_without_model_type():
    lines = [_exec("t", "trainer", 1, 2)]
    violations = validate_trace(parse_trace(lines))
    assert any("missing model_type" in v for v in violations)


def test_validate_flags_missing_trainer():
    violations = validate_trace(parse_trace(MINIMAL))
    assert "trace has no trainer execution" in violations


def test_validate_flags_analyzers_outside_transform():
    lines = [_exec("t", "trainer", 1, 2, model_type="dnn", analyzers=["mean"])]
    violations = validate_trace(parse_trace(lines))
    assert any("analyzers only allowed" in v for v in violations)


def test_index_orders_trainers_by_end_time():
    lines = [
        _exec("late", "trainer", 1, 100, model_type="dnn"),
        _exec("early", "trainer", 1, 50, model_type="dnn"),
    ]
    idx = index_trace(parse_trace(lines))
    assert idx.trainers == ("early", "late")


def test_index_breaks_ties_by_node_id():
    lines = [
        _exec("tb", "trainer", 1, 100, model_type="dnn"),
        _exec("ta", "trainer", 1, 100, model_type="dnn"),
    ]
    idx = index_trace(parse_trace(lines))
    assert idx.trainers == ("ta", "tb")


def test_index_fixture_trainers(warm_pair_trace):
    idx = index_trace(warm_pair_trace)
    assert idx.trainers == ("t1", "t2")
    assert idx.in_degree("t2") == 2
    assert idx.out_degree("t2") == 1


def test_every_edge_alternates_kinds(warm_pair_trace):
    for e in warm_pair_trace.edges:
        assert warm_pair_trace.is_execution(e.src) != warm_pair_trace.is_execution(e.dst)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_round_trip_random_traces(pyrandom):
    import numpy as np

    from oracles import random_trace

    rng = np.random.default_rng(pyrandom.randrange(2**32))
    trace = random_trace(rng, max_execs=25)
    assert validate_trace(trace) == []
    reparsed = parse_trace(list(serialize_trace(trace)))
    assert reparsed == trace
    again = parse_trace(list(serialize_trace(reparsed)))
    assert again == reparsed


def test_reindexing_permuted_file_is_identical(warm_pair_dir):
    import random

    path = warm_pair_dir / "warmstart_pair.ndjson"
    lines = path.read_text().strip().splitlines()
    shuffled = lines[:]
    random.Random(3).shuffle(shuffled)
    a = parse_trace(lines)
    b = parse_trace(shuffled)
    assert a == b
    assert index_trace(a).trainers == index_trace(b).trainers
