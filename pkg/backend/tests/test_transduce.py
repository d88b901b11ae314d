import random

import pytest

from app.flips import (
    FlipStructure,
    PreconditionError,
    apply_flip,
    coverage_radius,
    flip_cube,
    flipped_cube_instance,
    pattern_graph,
    random_partition,
    random_pattern,
)
from app.graphs import Graph, graph_metrics, make_cube, make_diag_cube, make_path
from app.transduce import (
    DiameterGuard,
    RangeViolation,
    Transduction,
    TransductionError,
    TransductionRun,
    apply_diag,
    apply_transduction,
    check_flip_reconstruction,
    color_cube_mod3,
    compose,
    count_runs,
    diag_transduction,
    edge_range,
    enumerate_runs,
    flip_reconstruction,
    flip_run,
    full_run,
    identity_transduction,
    reconstruct_flip,
)

SQUARE = Transduction(color_names=(), psi="dist(x,y) <= 2 & !(x = y)", declared_range=2)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_diag_transduction_builds_diag_cube(N):
    cube = make_cube(N)
    output = apply_diag(cube)
    assert output.edges == make_diag_cube(N).edges
    realized, witness = edge_range(cube, output)
    assert realized <= diag_transduction().declared_range
    if N > 1:
        assert realized == 3
        assert cube.distance(*witness) == 3


def test_diag_needs_coordinates():
    with pytest.raises(TransductionError):
        apply_diag(Graph(n=8))


def test_mod3_coloring():
    colored = color_cube_mod3(make_cube(3))
    assert 0 in colored.color("X1")
    assert 0 in colored.color("Y1")
    assert 0 in colored.color("Z1")
    assert sum(len(colored.color(f"X{r}")) for r in range(3)) == 27


def test_identity_keeps_graph():
    path = make_path(4)
    assert apply_transduction(identity_transduction(), path, full_run(path)).edges == path.edges


def test_keep_set_takes_induced_subgraph():
    output = apply_transduction(SQUARE, make_path(4), TransductionRun(keep={0, 2, 3}))
    assert output.n == 3
    assert output.edges == frozenset({(0, 1), (1, 2)})


def test_declared_range_is_enforced():
    tight = Transduction(color_names=(), psi="dist(x,y) <= 2 & !(x = y)", declared_range=1)
    path = make_path(4)
    with pytest.raises(RangeViolation) as info:
        apply_transduction(tight, path, full_run(path))
    assert info.value.realized == 2
    assert path.distance(*info.value.witness) == 2


def test_run_validation():
    path = make_path(3)
    with pytest.raises(TransductionError):
        apply_transduction(SQUARE, path, TransductionRun(coloring={"C": {0}}, keep={0}))
    with pytest.raises(TransductionError):
        apply_transduction(SQUARE, path, TransductionRun(keep={5}))
    with pytest.raises(TransductionError):
        Transduction(color_names=("C", "C"), psi="E(x,y)")
    marked = Transduction(color_names=("C",), psi="E(x,y) & (C(x) | C(y))")
    output = apply_transduction(marked, path, TransductionRun(coloring={"C": {0}}, keep={0, 1, 2}))
    assert output.edges == frozenset({(0, 1)})


def test_compose_multiplies_declared_range():
    pipeline = compose(SQUARE, SQUARE)
    assert pipeline.declared_range == 4
    path = make_path(6)
    runs = [full_run(path), full_run(path)]
    assert pipeline.realized_range(path, runs) == 4
    assert compose(pipeline, identity_transduction()).declared_range == 4
    assert compose(Transduction(color_names=(), psi="E(x,y)"), SQUARE).declared_range is None


def test_pipeline_traces_origins_through_keep():
    path = make_path(6)
    pipeline = compose(identity_transduction(), SQUARE)
    runs = [TransductionRun(keep={1, 2, 3, 4}), TransductionRun(keep={0, 1, 2, 3})]
    output, origin = pipeline.apply_traced(path, runs)
    assert origin == (1, 2, 3, 4)
    assert (0, 2) in output.edges
    assert pipeline.realized_range(path, runs) == 2
    with pytest.raises(TransductionError):
        pipeline.apply(path, runs[:1])


def test_enumerate_runs_exhaustive_then_sampled():
    T = Transduction(color_names=("C",), psi="E(x,y)")
    path = make_path(2)
    keep = frozenset({0, 1})
    runs = list(enumerate_runs(T, path, budget=10, seed=0, keep=keep))
    assert len(runs) == count_runs(T, path, keep_fixed=True) == 4
    assert len({run.coloring["C"] for run in runs}) == 4
    sampled = list(enumerate_runs(T, path, budget=2, seed=5))
    again = list(enumerate_runs(T, path, budget=2, seed=5))
    assert sampled == again
    assert len(sampled) == 2
    assert count_runs(T, path, keep_fixed=False) == 16
    with pytest.raises(TransductionError):
        list(enumerate_runs(T, path, budget=0, seed=0))


@pytest.mark.parametrize("k,seed", [(2, 0), (2, 1), (2, 2), (3, 0), (3, 1)])
def test_flip_reconstruction_recovers_cube(k, seed):
    fs = flipped_cube_instance(4, k, seed)
    alpha = int(coverage_radius(fs))
    output, ran = reconstruct_flip(fs, alpha)
    assert ran
    assert output.edges == make_cube(4).edges

    report = check_flip_reconstruction(fs)
    assert report["status"] == "pass"
    assert report["alpha"] == alpha
    assert report["bound"] == 2 * k * alpha + 4 * k
    assert report["realized_bound"] <= report["bound"]


def test_flip_reconstruction_on_small_cubes_runs_only_when_connected():
    rng = random.Random(3)
    for _ in range(25):
        k = rng.randint(1, 3)
        fs = flip_cube(2, random_partition(8, k, rng, min_part_size=1), random_pattern(k, rng))
        output, ran = reconstruct_flip(fs, alpha=10)
        assert ran == graph_metrics(fs.graph).connected
        if ran:
            assert output.edges == make_cube(2).edges == apply_flip(fs).edges
        else:
            assert output.edges == fs.graph.edges


def test_flip_reconstruction_guard_falls_back_to_input_edges():
    path = make_path(12)
    fs = FlipStructure(graph=path, k=1, part_of=(1,) * 12, pattern=pattern_graph(1, loops=[1]))
    output, ran = reconstruct_flip(fs, alpha=0)
    assert not ran
    assert output.edges == path.edges

    report = check_flip_reconstruction(fs)
    assert report["status"] == "fail"
    assert report["witness"] == {"diameter": 11}
    assert report["bound"] == 4

    with pytest.raises(PreconditionError):
        check_flip_reconstruction(FlipStructure(graph=path, k=1, part_of=(1,) * 12, pattern=pattern_graph(1)))


def test_compose_keeps_stage_guards():
    path = make_path(3)
    fs = FlipStructure(graph=path, k=1, part_of=(1, 1, 1), pattern=pattern_graph(1, loops=[1]))
    pipeline = compose(identity_transduction(), flip_reconstruction(fs, alpha=0))
    assert pipeline.guards == (None, DiameterGuard(4))
    output, origin, skipped = pipeline.apply_guarded(path, [full_run(path), flip_run(fs)])
    assert skipped == ()
    assert output.edges == frozenset({(0, 2)})
    assert origin == (0, 1, 2)
    with pytest.raises(TransductionError):
        flip_reconstruction(fs, alpha=-1)
