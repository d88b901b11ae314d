import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.graphs import (
    INF,
    CubeCoord,
    Graph,
    GraphError,
    ProductVertex,
    ball,
    complement,
    cube_index,
    disjoint_union,
    distance_to_set,
    graph_by_name,
    graph_metrics,
    induced_subgraph,
    make_complete,
    make_cube,
    make_cycle,
    make_diag_cube,
    make_edgeless,
    make_path,
    strong_product,
)


@st.composite
def small_graphs(draw, max_n=7):
    n = draw(st.integers(min_value=0, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return Graph.from_edges(n, edges)


def test_cube_index_matches_labels():
    cube = make_cube(3)
    coord = CubeCoord(2, 3, 1)
    assert cube_index(3, coord) == 15
    assert cube.labels[15] == coord
    assert cube.label_index[coord] == 15


def test_cube_edge_count():
    for N in (1, 2, 3):
        assert len(make_cube(N).edges) == 3 * N * N * (N - 1)


def test_diag_cube_two():
    diag = make_diag_cube(2)
    assert diag.n == 8
    assert len(diag.edges) == 19
    assert diag.has_edge(0, 7)
    # (1,2,1) and (2,1,1) differ in opposite directions
    assert not diag.has_edge(2, 4)


@pytest.mark.parametrize("N,expected", [(2, 7), (3, 14), (4, 14), (5, 14), (6, 14)])
def test_diag_cube_degree_is_at_most_fourteen(N, expected):
    metrics = graph_metrics(make_diag_cube(N))
    assert metrics.connected
    assert metrics.max_degree == expected <= 14
    if N >= 3:
        assert make_diag_cube(N).degree(cube_index(N, CubeCoord(2, 2, 2))) == 14


def test_strong_product_of_edges_is_clique():
    product = strong_product(make_path(2), make_path(2))
    assert product.edges == make_complete(4).edges
    assert product.labels[1] == ProductVertex(0, 2)


def test_strong_product_rejects_loops():
    pattern = Graph.from_edges(1, [(0, 0)], pattern=True)
    with pytest.raises(GraphError):
        strong_product(pattern, make_path(2))


def test_ball_and_set_distance():
    path = make_path(5)
    assert ball(path, 0, 2) == frozenset({0, 1, 2})
    assert ball(path, 2, 0) == frozenset({2})
    assert distance_to_set(path, 0, frozenset({3, 4})) == 3
    assert distance_to_set(make_edgeless(3), 0, frozenset({1})) == INF


def test_metrics_of_degenerate_graphs():
    assert graph_metrics(Graph(n=0)).to_dict() == {"connected": True, "diameter": 0, "max_degree": 0}
    edgeless = graph_metrics(make_edgeless(2))
    assert not edgeless.connected
    assert edgeless.diameter == INF
    assert graph_metrics(make_cycle(6)).diameter == 3


def test_induced_subgraph_renumbers_in_order():
    sub, index_map = induced_subgraph(make_cycle(5), [4, 0, 1])
    assert index_map == {0: 0, 1: 1, 4: 2}
    assert sub.edges == frozenset({(0, 1), (0, 2)})


def test_complement_and_disjoint_union():
    assert complement(make_cycle(4)).edges == frozenset({(0, 2), (1, 3)})
    union = disjoint_union(make_path(2), make_path(2))
    assert union.edges == frozenset({(0, 1), (2, 3)})


def test_validation_errors():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(GraphError):
        Graph(n=3, edges=frozenset({(2, 1)}))
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(GraphError):
        make_cycle(2)
    with pytest.raises(GraphError):
        make_path(0)


def test_graph_by_name():
    assert graph_by_name("P5").edges == make_path(5).edges
    assert graph_by_name("c4").n == 4
    assert graph_by_name("D2").edges == make_diag_cube(2).edges
    for bad in ("", "X3", "P", "Pfive"):
        with pytest.raises(GraphError):
            graph_by_name(bad)


@settings(max_examples=60, deadline=None)
@given(small_graphs())
def test_complement_is_an_involution(graph):
    assert complement(complement(graph)).edges == graph.edges
    assert len(graph.edges) + len(complement(graph).edges) == graph.n * (graph.n - 1) // 2


@settings(max_examples=60, deadline=None)
@given(small_graphs())
def test_distances_are_symmetric(graph):
    for u in graph.vertices:
        for v in graph.vertices:
            assert graph.distance(u, v) == graph.distance(v, u)


@settings(max_examples=40, deadline=None)
@given(small_graphs(max_n=4), small_graphs(max_n=4))
def test_strong_product_is_symmetric(G, H):
    GH, HG = strong_product(G, H), strong_product(H, G)
    assert len(GH.edges) == G.n * len(H.edges) + len(G.edges) * H.n + 2 * len(G.edges) * len(H.edges)
    assert nx.is_isomorphic(GH.nx_graph, HG.nx_graph)
