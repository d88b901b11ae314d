import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.cache_db import get_cached_width, graph_fingerprint
from app.graphs import (
    Graph,
    disjoint_union,
    make_complete,
    make_cube,
    make_cycle,
    make_edgeless,
    make_path,
)
from app.width import (
    CLIQUEWIDTH,
    TREEWIDTH,
    TreeDecomposition,
    WidthError,
    WidthResult,
    check_product_tw_bound,
    check_sparse_cw_tw,
    cliquewidth_exact_tiny,
    cliquewidth_upper,
    decomposition_from_order,
    find_kss,
    ks_free,
    product_decomposition,
    treewidth_exact,
    treewidth_lower,
    treewidth_upper,
    verify_expression,
    verify_tree_decomposition,
)


@st.composite
def small_graphs(draw, max_n=7):
    n = draw(st.integers(min_value=0, max_value=max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    return Graph.from_edges(n, edges)


@pytest.mark.parametrize(
    "graph, expected",
    [
        (make_path(1), 0),
        (make_path(6), 1),
        (make_cycle(5), 2),
        (make_complete(4), 3),
        (make_cube(2), 3),
        (make_edgeless(4), 0),
        (disjoint_union(make_complete(4), make_path(3)), 3),
    ],
)
def test_exact_treewidth(graph, expected):
    result = treewidth_exact(graph)
    assert result.exact
    assert result.value == expected
    assert verify_tree_decomposition(graph, result.certificate) == expected


def test_empty_graph_widths():
    empty = Graph(n=0)
    assert treewidth_exact(empty).value == 0
    assert cliquewidth_exact_tiny(empty).value == 0


def test_cycle_bounds():
    cycle = make_cycle(5)
    width, td = treewidth_upper(cycle)
    assert width == 2
    assert verify_tree_decomposition(cycle, td) == 2
    assert treewidth_lower(cycle) >= 2


def test_budget_downgrades_to_bounds():
    cube = make_cube(3)
    result = treewidth_exact(cube, budget=1)
    assert result.lower <= result.upper
    assert verify_tree_decomposition(cube, result.certificate) == result.upper
    if not result.exact:
        assert result.lower < result.upper
        assert result.value is None


def test_elimination_order_decomposition():
    path = make_path(5)
    td = decomposition_from_order(path, [0, 1, 2, 3, 4])
    assert verify_tree_decomposition(path, td) == 1
    with pytest.raises(WidthError):
        decomposition_from_order(path, [0, 1, 2])


def test_invalid_decompositions_are_rejected():
    path = make_path(3)
    uncovered = TreeDecomposition(bags=(frozenset({0, 1}), frozenset({2})), edges=((0, 1),))
    with pytest.raises(WidthError):
        verify_tree_decomposition(path, uncovered)
    forest = TreeDecomposition(bags=(frozenset({0, 1}), frozenset({1, 2})))
    with pytest.raises(WidthError):
        verify_tree_decomposition(path, forest)
    split = TreeDecomposition(
        bags=(frozenset({0, 1}), frozenset({2}), frozenset({1, 2})), edges=((0, 1), (1, 2))
    )
    with pytest.raises(WidthError):
        verify_tree_decomposition(path, split)


def test_width_result_validation():
    with pytest.raises(WidthError):
        WidthResult(TREEWIDTH, 3, 2, False)
    with pytest.raises(WidthError):
        WidthResult(TREEWIDTH, 1, 2, True)
    result = treewidth_exact(make_cycle(4))
    restored = WidthResult.from_dict(result.to_dict())
    assert restored == result
    assert isinstance(restored.certificate, TreeDecomposition)


@pytest.mark.parametrize("graph, k, bound", [(make_path(5), 3, 5), (make_complete(3), 2, 5), (make_cycle(4), 1, 2)])
def test_product_treewidth_bound(graph, k, bound):
    report = check_product_tw_bound(graph, k)
    assert report["status"] == "pass"
    assert report["bound"] == bound
    assert report["certified_width"] == bound
    assert report["product"]["upper"] <= bound


def test_product_decomposition_shape():
    td = treewidth_exact(make_path(2)).certificate
    blown = product_decomposition(td, 2)
    assert all(len(bag) == 2 * len(orig) for bag, orig in zip(blown.bags, td.bags))
    with pytest.raises(WidthError):
        product_decomposition(td, 0)


@pytest.mark.parametrize(
    "graph, expected",
    [
        (make_path(1), 1),
        (make_edgeless(3), 1),
        (make_path(2), 2),
        (make_complete(4), 2),
        (make_path(4), 3),
    ],
)
def test_cliquewidth_small_graphs(graph, expected):
    result = cliquewidth_exact_tiny(graph)
    assert result.exact
    assert result.value == expected
    assert verify_expression(graph, result.certificate, expected)


def test_cliquewidth_label_cap_and_size_limit():
    capped = cliquewidth_exact_tiny(make_path(4), max_labels=2)
    assert not capped.exact
    assert capped.lower == 3
    large = cliquewidth_exact_tiny(make_path(20))
    assert not large.exact
    assert large.lower == 2
    assert large.upper == cliquewidth_upper(make_path(20)) == 3


def test_verify_expression_rejects_wrong_graphs():
    flat = {
        "op": "union",
        "left": {"op": "vertex", "v": 0, "label": 0},
        "right": {"op": "vertex", "v": 1, "label": 0},
    }
    with pytest.raises(WidthError):
        verify_expression(make_path(2), flat, 2)
    assert verify_expression(make_edgeless(2), flat, 1)
    with pytest.raises(WidthError):
        verify_expression(make_edgeless(2), flat, 0)
    joined = {"op": "join", "a": 0, "b": 0, "arg": flat}
    with pytest.raises(WidthError):
        verify_expression(make_path(2), joined, 1)


def test_kss_detection():
    A, B = find_kss(make_cycle(4), 2)
    assert len(A) == len(B) == 2
    assert ks_free(make_path(4), 2)
    assert find_kss(make_complete(3), 2) is None
    with pytest.raises(WidthError):
        find_kss(make_path(3), 0)


def test_sparse_record():
    report = check_sparse_cw_tw(make_cycle(4), c=3, s=2)
    assert report["in_family"] is False
    assert report["kss_witness"] is not None
    report = check_sparse_cw_tw(make_path(5), c=4, s=2)
    assert report["in_family"] is True
    assert report["treewidth"]["upper"] == 1


def test_width_cache(monkeypatch):
    monkeypatch.setenv("LAB_WIDTH_CACHE", "1")
    graph = make_complete(4)
    first = treewidth_exact(graph)
    cached = get_cached_width(graph_fingerprint(graph), TREEWIDTH)
    assert cached["upper"] == 3
    assert treewidth_exact(graph) == first
    cliquewidth_exact_tiny(graph)
    assert get_cached_width(graph_fingerprint(graph), CLIQUEWIDTH)["upper"] == 2


@settings(max_examples=40, deadline=None)
@given(small_graphs())
def test_treewidth_sandwich(graph):
    result = treewidth_exact(graph)
    assert result.exact
    upper, _ = treewidth_upper(graph)
    assert treewidth_lower(graph) <= result.value <= upper
    assert verify_tree_decomposition(graph, result.certificate) == result.value


@settings(max_examples=25, deadline=None)
@given(small_graphs(max_n=6))
def test_cliquewidth_certificates_rebuild(graph):
    result = cliquewidth_exact_tiny(graph)
    assert result.exact
    assert result.lower <= graph.n
    if graph.n:
        assert verify_expression(graph, result.certificate, result.value)
