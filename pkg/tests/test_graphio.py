import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsetopo.errors import ConfigurationError, DimensionError
from sparsetopo.graphio import (
    Edge,
    Topology,
    compare,
    export_dot,
    load_topology,
    save_topology,
    threshold_edges,
)

IDS = ["a", "b", "c", "d"]


def topo(edges, n=4):
    return Topology(n, IDS[:n], [Edge(*e) for e in edges])


@st.composite
def topologies(draw):
    n = draw(st.integers(2, 6))
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    weights = draw(st.lists(st.floats(0, 10), min_size=len(chosen), max_size=len(chosen)))
    return Topology(n, [f"n{k}" for k in range(n)], [Edge(i, j, w) for (i, j), w in zip(chosen, weights)])


def test_threshold_zero_is_identity():
    t = topo([(0, 1, 0.1), (2, 3, 5.0)])
    assert threshold_edges(t, 0.0).edges == t.edges


def test_threshold_equal_weights_kept():
    t = topo([(0, 1, 2.0), (1, 2, 2.0), (3, 0, 2.0)])
    assert threshold_edges(t, 0.5).edges == t.edges


def test_threshold_removes_small():
    t = topo([(0, 1, 1.0), (1, 2, 0.01)])
    assert threshold_edges(t, 0.05).edge_set() == {(0, 1)}


def test_threshold_empty_and_invalid():
    assert threshold_edges(topo([]), 0.3).edges == []
    with pytest.raises(ConfigurationError):
        threshold_edges(topo([]), 1.0)


@settings(max_examples=50, deadline=None)
@given(topologies(), st.floats(0, 0.99))
def test_threshold_idempotent(t, delta):
    once = threshold_edges(t, delta)
    assert threshold_edges(once, delta).edges == once.edges


def test_compare_identical():
    t = topo([(0, 1, 1.0), (1, 2, 1.0)])
    r = compare(t, t)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_compare_empty_estimate():
    r = compare(topo([(0, 1, 1.0)]), topo([]))
    assert r.precision == 1.0 and r.recall == 0.0 and r.f1 == 0.0


def test_compare_empty_truth():
    r = compare(topo([]), topo([]))
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_compare_counts():
    truth = topo([(0, 1, 1.0), (1, 2, 1.0)])
    est = topo([(0, 1, 1.0), (2, 0, 1.0)])
    r = compare(truth, est)
    assert (r.true_positives, r.false_positives, r.false_negatives) == (1, 1, 1)
    assert r.precision == 0.5 and r.recall == 0.5 and r.f1 == 0.5


def test_compare_reversed_edge_is_wrong():
    r = compare(topo([(0, 1, 1.0)]), topo([(1, 0, 1.0)]))
    assert r.true_positives == 0


def test_compare_node_mismatch():
    with pytest.raises(DimensionError):
        compare(topo([], 3), topo([], 4))
    with pytest.raises(DimensionError):
        compare(topo([], 3), Topology(3, ["a", "b", "z"], []))


@settings(max_examples=50, deadline=None)
@given(topologies())
def test_compare_self_is_perfect(t):
    r = compare(t, t)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(topologies())
def test_json_round_trip(t):
    back = Topology.from_json(json.loads(json.dumps(t.to_json())))
    assert back == t


def test_save_load(tmp_path):
    t = Topology(3, IDS[:3], [Edge(2, 0, 0.5)], [0.1, 0.2, 0.3])
    save_topology(t, tmp_path / "t.json")
    assert load_topology(tmp_path / "t.json") == t


def test_invariants():
    with pytest.raises(ConfigurationError):
        topo([(1, 1, 1.0)])
    with pytest.raises(ConfigurationError):
        topo([(0, 1, -1.0)])
    with pytest.raises(ConfigurationError):
        topo([(0, 7, 1.0)])
    with pytest.raises(ConfigurationError):
        topo([(0, 1, 1.0), (0, 1, 2.0)])


def test_dot_empty(tmp_path):
    export_dot(topo([]), tmp_path / "g.dot")
    text = (tmp_path / "g.dot").read_text()
    assert "->" not in text
    assert all(f'"{n}";' in text for n in IDS)


def test_dot_single_edge_and_determinism(tmp_path):
    t = topo([(2, 0, 0.125)])
    export_dot(t, tmp_path / "a.dot")
    export_dot(Topology.from_json(t.to_json()), tmp_path / "b.dot")
    a = (tmp_path / "a.dot").read_bytes()
    assert a == (tmp_path / "b.dot").read_bytes()
    edge_lines = [ln for ln in a.decode().splitlines() if "->" in ln]
    assert edge_lines == ['  "c" -> "a" [label="0.125", weight="0.125"];']


def test_dot_edge_order():
    t = topo([(3, 0, 1.0), (0, 2, 1.0), (0, 1, 1.0)])
    from sparsetopo.graphio import to_dot

    lines = [ln for ln in to_dot(t).splitlines() if "->" in ln]
    assert [ln.split(" [")[0].strip() for ln in lines] == ['"a" -> "b"', '"a" -> "c"', '"d" -> "a"']


def test_dot_io_error(tmp_path):
    with pytest.raises(OSError):
        export_dot(topo([]), tmp_path / "missing" / "g.dot")
