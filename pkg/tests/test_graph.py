import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import largest_of, random_graph, union_find_components
from oracles import dense_product_component
from dscore.graph import (
    DirectedGraph,
    EdgeListError,
    NodeSet,
    degrees,
    from_edge_list,
    induced_subgraph,
    largest_weak_component,
    parse_labels,
    product_component,
    to_edge_list,
    write_labels,
)


def test_two_node_cycle():
    g = from_edge_list("0 1\n1 0\n")
    assert g.n == 2
    assert g.edge_set() == {(0, 1), (1, 0)}


def test_duplicates_collapse_base_one():
    g = from_edge_list("1 2\n1 2\n", base=1)
    assert g.n == 2 and g.edge_set() == {(0, 1)}
    assert g.adjacency.data.tolist() == [1]


def test_comments_blank_lines_and_self_loops():
    text = "# header\n\n0 0\n0 1\n% other comment\n"
    assert from_edge_list(text).edge_set() == {(0, 1)}
    assert from_edge_list(text, drop_self_loops=False).edge_set() == {(0, 0), (0, 1)}


def test_stream_input():
    assert from_edge_list(io.StringIO("2 0\n")).edge_set() == {(2, 0)}


@pytest.mark.parametrize("text, base, match", [
    ("0 1\n2\n", 0, "line 2"),
    ("0 x\n", 0, "line 1"),
    ("0 1\n", 1, "below base"),
])
def test_parse_errors(text, base, match):
    with pytest.raises(EdgeListError, match=match):
        from_edge_list(text, base=base)


def test_bad_base():
    with pytest.raises(ValueError):
        from_edge_list("0 1", base=2)


def test_edge_list_n_too_small():
    with pytest.raises(EdgeListError):
        from_edge_list("0 5\n", n=3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.sets(st.tuples(st.integers(0, 29), st.integers(0, 29)), max_size=80),
       st.sampled_from([0, 1]))
def test_round_trip(n, pairs, base):
    pairs = {(i % n, j % n) for i, j in pairs}
    g = DirectedGraph(n, [p[0] for p in pairs], [p[1] for p in pairs])
    back = from_edge_list(to_edge_list(g, base), base=base, drop_self_loops=False, n=n)
    assert back == g


def test_out_and_in_neighbors():
    g = DirectedGraph(4, [0, 0, 2], [1, 3, 1])
    assert g.out_neighbors(0).tolist() == [1, 3]
    assert g.in_neighbors(1).tolist() == [0, 2]
    assert g.has_edge(2, 1) and not g.has_edge(1, 2)
    assert g.transpose().edge_set() == {(1, 0), (3, 0), (1, 2)}


def test_endpoint_out_of_range():
    with pytest.raises(IndexError):
        DirectedGraph(2, [0], [2])


def test_nodeset():
    s = NodeSet.from_indices([3, 1, 3], 5)
    assert s.members.tolist() == [1, 3]
    assert 3 in s and 2 not in s and len(s) == 2
    assert s.complement().members.tolist() == [0, 2, 4]
    assert s.intersection(NodeSet.from_indices([0, 1], 5)).members.tolist() == [1]
    with pytest.raises(IndexError):
        NodeSet.from_indices([5], 5)


def test_labels_io():
    labels = parse_labels("# c\n1 7\n2 3\n", base=1)
    assert labels == {0: 7, 1: 3}
    assert write_labels([7, 3], base=1) == "1 7\n2 3\n"


def test_weak_component_isolated_node():
    g = DirectedGraph(3, [0], [1])
    assert largest_weak_component(g).members.tolist() == [0, 1]


def test_weak_component_tie_break():
    g = DirectedGraph(4, [2, 3, 0, 1], [3, 2, 1, 0])
    assert largest_weak_component(g).members.tolist() == [0, 1]


def test_weak_component_matches_union_find(rng):
    for _ in range(30):
        n = int(rng.integers(1, 200))
        g = random_graph(rng, n, float(rng.uniform(0.0, 3.0 / n)))
        expect = largest_of(union_find_components(n, g.edges().tolist()))
        assert largest_weak_component(g).members.tolist() == expect


def test_product_component_definition_cases():
    g = DirectedGraph(3, [0, 1], [2, 2])
    assert product_component(g, "left").members.tolist() == [0, 1]
    assert product_component(g, "right").members.tolist() == [0]


def test_product_component_dense_oracle(rng):
    for _ in range(50):
        n = int(rng.integers(1, 41))
        g = random_graph(rng, n, float(rng.uniform(0.0, 4.0 / n)))
        for side in ("left", "right"):
            assert product_component(g, side).members.tolist() == dense_product_component(g, side)


def test_product_component_transpose_symmetry(rng):
    for _ in range(20):
        g = random_graph(rng, 30, 0.05)
        assert product_component(g, "left") == product_component(g.transpose(), "right")


def test_product_component_bad_side():
    with pytest.raises(ValueError):
        product_component(DirectedGraph(2, [0], [1]), "up")


def test_induced_subgraph_cases():
    g = DirectedGraph(4, [1, 0], [3, 1])
    sub, idx = induced_subgraph(g, NodeSet.from_indices([1, 3], 4))
    assert sub.edge_set() == {(0, 1)}
    assert idx == {1: 0, 3: 1}
    full, ident = induced_subgraph(g, NodeSet.from_indices(range(4), 4))
    assert full == g and ident == {i: i for i in range(4)}
    with pytest.raises(ValueError):
        induced_subgraph(g, NodeSet.from_indices([], 4))


def test_induced_subgraph_filter_oracle(rng):
    for _ in range(20):
        g = random_graph(rng, 40, 0.1)
        keep = sorted(rng.choice(40, size=int(rng.integers(1, 40)), replace=False).tolist())
        sub, idx = induced_subgraph(g, NodeSet.from_indices(keep, 40))
        pos = {v: k for k, v in enumerate(keep)}
        expect = {(pos[i], pos[j]) for i, j in g.edge_set() if i in pos and j in pos}
        assert sub.edge_set() == expect
        out, inn = degrees(sub)
        for k, v in enumerate(keep):
            assert out[k] == sum(1 for j in g.out_neighbors(v) if j in pos)
            assert inn[k] == sum(1 for i in g.in_neighbors(v) if i in pos)


def test_degrees():
    assert [d.tolist() for d in degrees(DirectedGraph(3, [], []))] == [[0, 0, 0], [0, 0, 0]]
    out, inn = degrees(DirectedGraph(3, [0, 0], [1, 2]))
    assert out.tolist() == [2, 0, 0] and inn.tolist() == [0, 1, 1]


def test_degree_sums(rng):
    g = random_graph(rng, 60, 0.1)
    out, inn = degrees(g)
    assert out.sum() == inn.sum() == g.n_edges == len(g.edge_set())
