import random
from itertools import combinations, product

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.flips import (
    FlipStructure,
    FlipStructureError,
    PreconditionError,
    apply_flip,
    check_all_flip_lemmas,
    check_diameter_bound,
    check_small_dist,
    coverage_radius,
    eliminate_small_parts,
    extract_avoiding_subcube,
    find_cube_in_ball,
    flip_cube,
    flip_lambda,
    flipped_cube_instance,
    pattern_components,
    pattern_graph,
    random_partition,
    random_pattern,
    random_substructure,
    small_part_instance,
    substructure,
    unaffected_set,
    verify_cube_witness,
)
from app.graphs import CubeCoord, Graph, cube_index, induced_subgraph, make_cube, make_path


def _cube_parts(N, rule):
    return [rule(c) for c in make_cube(N).labels]


def test_flip_restores_cube():
    fs = flipped_cube_instance(4, 3, seed=1)
    assert apply_flip(fs).edges == make_cube(4).edges
    assert fs.graph.edges != make_cube(4).edges
    assert verify_cube_witness(fs).side == 4


def test_structure_validation():
    cube = make_cube(2)
    with pytest.raises(FlipStructureError):
        FlipStructure(graph=cube, k=0, part_of=(1,) * 8, pattern=pattern_graph(1))
    with pytest.raises(FlipStructureError):
        FlipStructure(graph=cube, k=2, part_of=(1,) * 8, pattern=pattern_graph(1))
    with pytest.raises(FlipStructureError):
        FlipStructure(graph=cube, k=2, part_of=(3,) * 8, pattern=pattern_graph(2))
    with pytest.raises(FlipStructureError):
        FlipStructure(graph=cube, k=2, part_of=(1,) * 8, pattern=pattern_graph(2, loops=[2]))
    # an empty part is fine while it stays isolated
    fs = FlipStructure(graph=cube, k=2, part_of=(1,) * 8, pattern=pattern_graph(2, loops=[1]))
    assert fs.part(2) == frozenset()
    assert fs.flips(1, 1)
    assert not fs.flips(1, 2)


def test_center_block_lambda_and_coverage():
    part_of = _cube_parts(5, lambda c: 2 if all(2 <= x <= 4 for x in c.as_tuple()) else 1)
    fs = flip_cube(5, part_of, pattern_graph(2, loops=[1]))
    assert len(unaffected_set(fs)) == 27
    assert flip_lambda(fs) == 1
    assert coverage_radius(fs) == 2


@pytest.mark.parametrize("seed", range(6))
def test_flip_leaves_unaffected_set_untouched(seed):
    fs = flipped_cube_instance(4, 3, seed, isolated=[3])
    S = unaffected_set(fs)
    assert fs.part(3) <= S
    before, _ = induced_subgraph(fs.graph, S)
    after, _ = induced_subgraph(apply_flip(fs), S)
    assert before.edges == after.edges
    assert nx.is_isomorphic(after.nx_graph, induced_subgraph(make_cube(4), S)[0].nx_graph)


def test_lambda_is_none_without_isolated_parts():
    fs = flipped_cube_instance(3, 1, seed=0, min_part_size=0)
    assert flip_lambda(fs) is None


def test_induced_cube_in_ball():
    cube = make_cube(9)
    fs = FlipStructure(graph=cube, k=1, part_of=(1,) * cube.n, pattern=pattern_graph(1))
    center = cube_index(9, CubeCoord(5, 5, 5))
    found = find_cube_in_ball(fs, center, 6)
    assert len(found) == 8
    sub, _ = induced_subgraph(cube, found)
    assert nx.is_isomorphic(sub.nx_graph, make_cube(2).nx_graph)
    with pytest.raises(PreconditionError):
        find_cube_in_ball(fs, center, 10)


def test_ball_must_stay_unaffected():
    part_of = _cube_parts(6, lambda c: 1 if c.i == 1 else 2)
    fs = flip_cube(6, part_of, pattern_graph(2, loops=[1]))
    corner = cube_index(6, CubeCoord(3, 1, 1))
    assert find_cube_in_ball(fs, corner, 1)
    with pytest.raises(PreconditionError):
        find_cube_in_ball(fs, corner, 3)


def test_extract_block_avoiding_small_part():
    part_of = _cube_parts(6, lambda c: 1 if c.as_tuple() == (1, 1, 1) else 2)
    fs = flip_cube(6, part_of, pattern_graph(2, edges=[(1, 2)], loops=[2]))
    sub = extract_avoiding_subcube(fs, 1)
    assert sub.graph.n == 8
    assert sub.part(1) == frozenset()
    assert sub.is_isolated(1)
    assert sub.graph.labels[0] == CubeCoord(1, 1, 1)
    assert verify_cube_witness(sub).side == 2
    with pytest.raises(PreconditionError):
        extract_avoiding_subcube(fs, 2)


@pytest.mark.parametrize("size", [1, 7, 12])
def test_small_part_is_avoided_on_nine_cube(size):
    fs = small_part_instance(9, 3, seed=size, size=size)
    assert len(fs.part(1)) == size
    assert fs.part(2) and fs.part(3)
    sub = extract_avoiding_subcube(fs, 1)
    assert sub.graph.n == 27
    assert sub.part(1) == frozenset()
    assert verify_cube_witness(sub).side == 3
    assert nx.is_isomorphic(apply_flip(sub).nx_graph, make_cube(3).nx_graph)


def test_small_part_instance_rejects_bad_sizes():
    with pytest.raises(FlipStructureError):
        small_part_instance(3, 2, seed=0, size=0)
    with pytest.raises(FlipStructureError):
        small_part_instance(3, 1, seed=0, size=2)
    with pytest.raises(FlipStructureError):
        small_part_instance(2, 3, seed=0, size=7)


def test_extract_needs_side_divisible_by_three():
    part_of = _cube_parts(4, lambda c: 1 if c.as_tuple() == (1, 1, 1) else 2)
    fs = flip_cube(4, part_of, pattern_graph(2, loops=[2]))
    with pytest.raises(PreconditionError):
        extract_avoiding_subcube(fs, 1)


def test_eliminate_small_parts():
    small = {(1, 1, 1): 1, (9, 9, 9): 2, (9, 9, 8): 2}
    part_of = _cube_parts(9, lambda c: small.get(c.as_tuple(), 3))
    pattern = pattern_graph(3, edges=[(1, 3), (2, 3)], loops=[3])
    result = eliminate_small_parts(flip_cube(9, part_of, pattern))
    assert result.graph.n == 27
    assert len(result.part(3)) == 27
    assert result.part(1) == result.part(2) == frozenset()
    assert verify_cube_witness(result).side == 3


def test_small_dist_preconditions():
    fs = flipped_cube_instance(4, 2, seed=4)
    joined = [(i, j) for i in (1, 2) for j in (i, 2) if fs.flips(i, j)]
    for i, j in joined:
        report = check_small_dist(fs, i, j)
        assert report["status"] == "pass"
        assert report["realized_bound"] <= 3
    missing = [(i, j) for i in (1, 2) for j in (i, 2) if not fs.flips(i, j)]
    for i, j in missing:
        with pytest.raises(PreconditionError):
            check_small_dist(fs, i, j)
    bare = FlipStructure(graph=make_path(3), k=1, part_of=(1, 1, 1), pattern=pattern_graph(1, loops=[1]))
    with pytest.raises(PreconditionError):
        check_small_dist(bare, 1, 1)


def test_small_parts_fail_precondition():
    part_of = _cube_parts(3, lambda c: 1 if c.i == 1 else 2)
    fs = flip_cube(3, part_of, pattern_graph(2, edges=[(1, 2)]))
    with pytest.raises(PreconditionError):
        check_small_dist(fs, 1, 2)


@pytest.mark.parametrize("seed", range(4))
def test_all_lemmas_pass_on_flipped_cubes(seed):
    fs = flipped_cube_instance(4, 2 + seed % 2, seed=seed, isolated=[2] if seed % 2 else [])
    reports = check_all_flip_lemmas(fs)
    assert reports
    for name, report in reports.items():
        assert report["status"] == "pass", (name, report)


def test_diameter_bound_needs_coverage():
    fs = flipped_cube_instance(4, 2, seed=3, isolated=[2])
    coverage = coverage_radius(fs)
    assert coverage >= 1
    report = check_diameter_bound(fs, int(coverage))
    assert report["status"] == "pass"
    assert report["k_connected"]
    assert report["coverage"] == coverage
    assert report["lambda"] == flip_lambda(fs)
    assert report["realized_bound"] <= report["bound"]
    with pytest.raises(PreconditionError):
        check_diameter_bound(fs, int(coverage) - 1)


def test_pattern_components_skip_isolated_parts():
    part_of = _cube_parts(3, lambda c: c.i)
    fs = flip_cube(3, part_of, pattern_graph(3, loops=[1, 3]))
    assert pattern_components(fs) == [frozenset({1}), frozenset({3})]


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=3))
def test_flip_involution_property(seed, k):
    rng = random.Random(seed)
    part_of = random_partition(8, k, rng, min_part_size=1)
    fs = flip_cube(2, part_of, random_pattern(k, rng))
    assert apply_flip(fs).edges == make_cube(2).edges
    assert verify_cube_witness(fs).side == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=0, max_value=27))
def test_substructure_commutes_with_flip(seed, size):
    fs = flipped_cube_instance(3, 2, seed=seed, min_part_size=1)
    sub = random_substructure(fs, random.Random(seed), size)
    kept = sorted(set(random.Random(seed).sample(range(fs.graph.n), size)))
    expected, _ = induced_subgraph(apply_flip(fs), kept)
    assert apply_flip(sub).edges == expected.edges
    assert isinstance(sub.graph, Graph)


def _all_graphs(n):
    pairs = list(combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        yield Graph.from_edges(n, [pair for bit, pair in enumerate(pairs) if mask >> bit & 1])


def _all_patterns(k):
    pairs = list(combinations(range(1, k + 1), 2))
    for edge_mask in range(2 ** len(pairs)):
        edges = [pair for bit, pair in enumerate(pairs) if edge_mask >> bit & 1]
        for loop_mask in range(2 ** k):
            yield pattern_graph(k, edges, [a for a in range(1, k + 1) if loop_mask >> (a - 1) & 1])


def test_flip_involution_and_substructures_on_all_small_structures():
    patterns = {k: list(_all_patterns(k)) for k in (1, 2)}
    checked = 0
    for n in range(6):
        for graph in _all_graphs(n):
            for k in (1, 2):
                for part_of in product(range(1, k + 1), repeat=n):
                    for pattern in patterns[k]:
                        try:
                            fs = FlipStructure(graph=graph, k=k, part_of=part_of, pattern=pattern)
                        except FlipStructureError:
                            continue
                        flipped = apply_flip(fs)
                        back = FlipStructure(graph=flipped, k=k, part_of=part_of, pattern=pattern)
                        assert apply_flip(back).edges == graph.edges
                        # walk through every subset as the count advances
                        mask = checked % (1 << n)
                        A = [v for v in range(n) if mask >> v & 1]
                        expected, _ = induced_subgraph(flipped, A)
                        assert apply_flip(substructure(fs, A)).edges == expected.edges
                        checked += 1
    assert checked == 259_940
