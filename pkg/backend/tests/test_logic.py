import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.graphs import (
    ColoredGraph,
    CubeCoord,
    Graph,
    cube_index,
    make_complete,
    make_cube,
    make_cycle,
    make_edgeless,
    make_path,
)
from app.logic import (
    EvaluationError,
    FormulaSyntaxError,
    InterpretationError,
    UnboundVariableError,
    check_local,
    check_range,
    check_symmetric_antireflexive,
    classify_interpretation,
    evaluate,
    format_formula,
    interpret,
    interpretation_pairs,
    parse_formula,
    scattered_tuple_exists,
)
from app.transduce import color_cube_mod3, succ_text

PATH2 = "exists z. E(x,z) & E(z,y)"
SQUARE = "dist(x,y) <= 2 & !(x = y)"


def test_format_parses_back():
    formula = parse_formula("forall z. (C(z) -> E(x,z)) | !(x = y) & dist(x,y) > 3")
    assert parse_formula(format_formula(formula)) == formula


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("E(x,y) & $")
    assert info.value.position == 9


def test_unbound_variable_is_rejected():
    with pytest.raises(UnboundVariableError):
        parse_formula("E(x,w)", free_vars=("x", "y"))


def test_evaluate_quantifiers():
    path = make_path(3)
    assert evaluate(path, "E(x,y)", {"x": 0, "y": 1})
    assert evaluate(path, PATH2, {"x": 0, "y": 2})
    assert not evaluate(path, PATH2, {"x": 0, "y": 1})
    assert evaluate(path, "forall z. (E(x,z) -> z = y)", {"x": 0, "y": 1})


def test_evaluate_rejects_bad_assignments():
    with pytest.raises(EvaluationError):
        evaluate(make_path(3), "E(x,y)", {"x": 0})
    with pytest.raises(EvaluationError):
        evaluate(make_path(3), "E(x,y)", {"x": 0, "y": 7})
    with pytest.raises(EvaluationError):
        evaluate(make_path(3), "C(x)", {"x": 0})


def test_interpret_square_of_path():
    square = interpret(make_path(4), SQUARE)
    assert square.edges == frozenset({(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)})


def test_interpret_rejects_reflexive_and_asymmetric():
    with pytest.raises(InterpretationError) as info:
        interpret(make_path(2), "E(x,y) | x = y")
    assert info.value.witness == (0, 0)
    colored = ColoredGraph(make_path(2), {"C": {0}})
    with pytest.raises(InterpretationError):
        interpret(colored, "C(x) & E(x,y)")
    uncolored = ColoredGraph(make_path(2), {"C": set()})
    report = check_symmetric_antireflexive("C(x) & E(x,y)", [uncolored, colored])
    assert report["status"] == "fail"
    assert report["instance"] == 1


def test_interpretation_pairs_are_ordered():
    assert interpretation_pairs(make_path(2), "E(x,y)") == {(0, 1), (1, 0)}


def test_check_range():
    report = check_range(SQUARE, make_path(5), 1)
    assert report["status"] == "fail"
    assert report["realized_bound"] == 2
    assert check_range(SQUARE, make_path(5), 2)["status"] == "pass"


def test_check_local_radius():
    assert check_local(PATH2, make_path(3), 1)["status"] == "pass"
    report = check_local(PATH2, make_path(3), 0)
    assert report["status"] == "fail"
    assert report["global_value"] is True
    assert report["local_value"] is False


def test_check_local_fails_on_an_adjacent_pair():
    rho = "exists z. !(z = x) & !(z = y)"
    path = make_path(4)
    report = check_local(rho, path, 0)
    assert report["status"] == "fail"
    assert report["witness"] == [0, 1]
    assert (0, 1) in path.edges
    assert report["global_value"] is True
    assert report["local_value"] is False
    assert check_local(rho, path, 1)["status"] == "pass"


def test_succ_is_directed_on_colored_cube():
    cube = color_cube_mod3(make_cube(3))
    succ_x = succ_text("X", "x", "y")
    low = cube_index(3, CubeCoord(1, 1, 1))
    high = cube_index(3, CubeCoord(2, 1, 1))
    top = cube_index(3, CubeCoord(3, 1, 1))
    assert evaluate(cube, succ_x, {"x": low, "y": high})
    assert not evaluate(cube, succ_x, {"x": high, "y": low})
    assert evaluate(cube, succ_x, {"x": high, "y": top})
    assert not evaluate(cube, succ_x, {"x": low, "y": top})
    side = cube_index(3, CubeCoord(1, 2, 1))
    assert not evaluate(cube, succ_x, {"x": low, "y": side})


@pytest.mark.parametrize(
    "renamed",
    [
        "!(x = y) & exists w. E(x,w) & E(w,y)",
        "!(x = y) & exists z1. E(x,z1) & E(z1,y)",
        "!(x = y) & exists z. (exists w. E(x,w) & w = z) & E(z,y)",
    ],
)
def test_renaming_bound_variables_keeps_the_interpretation(renamed):
    two_step = "!(x = y) & exists z. E(x,z) & E(z,y)"
    for graph in (make_cycle(6), make_path(5), make_cube(2)):
        assert interpret(graph, renamed).edges == interpret(graph, two_step).edges
        assert interpretation_pairs(graph, renamed) == interpretation_pairs(graph, two_step)


def test_classify_priority():
    assert classify_interpretation("E(x,y)", make_complete(3), "E(x,y)") == "clique"
    assert classify_interpretation("E(x,y)", make_edgeless(3), "E(x,y)") == "edgeless"
    assert classify_interpretation("E(x,y)", make_path(3), "E(x,y)") == "equals_rho"
    assert classify_interpretation("!E(x,y)", make_path(3), "E(x,y)") == "equals_not_rho"
    assert classify_interpretation(PATH2, make_cycle(6), "E(x,y)") == "none"
    assert classify_interpretation(PATH2, make_cycle(5), "E(x,y)") == "equals_not_rho"


def test_scattered_tuple():
    assert scattered_tuple_exists(make_path(7), "true", 3, 1) == (0, 3, 6)
    assert scattered_tuple_exists(make_path(7), "true", 4, 1) is None
    assert scattered_tuple_exists(make_path(7), "exists y. E(x,y) & !(exists z. E(y,z) & !(z = x))", 2, 0) == (1, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=3))
def test_interpreted_distance_ball_matches_graph(n, r):
    path = make_path(n)
    output = interpret(path, f"dist(x,y) <= {r} & !(x = y)")
    expected = {(u, v) for u in range(n) for v in range(u + 1, n) if v - u <= r}
    assert output.edges == frozenset(expected)
    assert isinstance(output, Graph)
