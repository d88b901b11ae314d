import json
import math

import pytest

from app.flips import flipped_cube_instance
from app.graphs import CubeCoord, ProductVertex, make_cube, make_path
from app.schemas import (
    EmbeddingPayload,
    ExperimentConfig,
    FlipStructurePayload,
    GraphPayload,
    PayloadError,
    RunPayload,
    SliceDecompositionPayload,
    TransductionPayload,
    build,
    dumps,
    jsonable,
    load_json_file,
    parse_payload,
)
from app.slices import identity_embedding


def test_graph_payload_keeps_cube_labels():
    cube = make_cube(2)
    payload = GraphPayload.from_graph(cube)
    assert payload.label_kind == "cube"
    restored = parse_payload(payload.model_dump_json(), GraphPayload).to_graph()
    assert restored.edges == cube.edges
    assert restored.labels[7] == CubeCoord(2, 2, 2)


def test_graph_payload_product_labels_and_colors():
    graph, _ = identity_embedding(make_path(2), 2)
    payload = GraphPayload.from_graph(graph)
    assert payload.label_kind == "product"
    assert payload.to_graph().labels[3] == ProductVertex(1, 2)
    colored = GraphPayload(n=3, edges=[(0, 1)], colors={"C": [2]}).to_colored()
    assert colored.color("C") == frozenset({2})


def test_bad_graph_payloads():
    with pytest.raises(PayloadError):
        parse_payload("{not json", GraphPayload)
    with pytest.raises(PayloadError):
        parse_payload('{"edges": []}', GraphPayload)
    with pytest.raises(PayloadError):
        build(GraphPayload(n=2, edges=[(0, 5)]), "to_graph")
    with pytest.raises(PayloadError):
        GraphPayload(n=1, labels=[[1, 1]], label_kind="polar").to_graph()


def test_transduction_payload_uses_range_alias():
    payload = parse_payload('{"colors": ["C"], "psi": "E(x,y) & C(x) & C(y)", "range": 1}', TransductionPayload)
    transduction = payload.to_transduction()
    assert transduction.declared_range == 1
    assert transduction.color_names == ("C",)
    dumped = TransductionPayload.from_transduction(transduction).model_dump(by_alias=True)
    assert dumped["range"] == 1
    with pytest.raises(PayloadError):
        build(parse_payload('{"psi": "E(x,"}', TransductionPayload), "to_transduction")


def test_run_payload_defaults_to_keep_everything():
    run = RunPayload().to_run(4)
    assert run.keep == frozenset(range(4))
    assert RunPayload(coloring={"C": [1]}, keep=[1]).to_run(4).coloring == {"C": frozenset({1})}


def test_flip_structure_payload():
    fs = flipped_cube_instance(3, 2, seed=2, min_part_size=1)
    payload = FlipStructurePayload.from_structure(fs)
    restored = parse_payload(payload.model_dump_json(), FlipStructurePayload).to_structure()
    assert restored.part_of == fs.part_of
    assert restored.pattern.edges == fs.pattern.edges
    assert restored.pattern.loops == fs.pattern.loops
    broken = payload.model_copy(update={"k": 1})
    with pytest.raises(PayloadError):
        build(broken, "to_structure")


def test_embedding_and_slice_payloads():
    graph, emb = identity_embedding(make_path(2), 3)
    raw = json.dumps(EmbeddingPayload.from_embedding(emb).model_dump(by_alias=True))
    assert '"map"' in raw
    assert parse_payload(raw, EmbeddingPayload).to_embedding() == emb
    sd = parse_payload('{"parts": [[0, 1], [2]], "guard": {"1": 2}}', SliceDecompositionPayload).to_decomposition()
    assert sd.guard == {1: 2}
    assert sd.length == 2
    with pytest.raises(PayloadError):
        build(SliceDecompositionPayload(parts=[[0], [0]]), "to_decomposition")


def test_jsonable_and_dumps():
    assert jsonable(math.inf) == "inf"
    assert jsonable({1: frozenset({3, 2})}) == {"1": [2, 3]}
    assert jsonable(CubeCoord(1, 2, 3)) == [1, 2, 3]
    config = ExperimentConfig(command="width", seed=3)
    assert json.loads(dumps({"config": config}))["config"]["seed"] == 3
    assert dumps({"b": 1, "a": 2}) == '{"a": 2, "b": 1}'


def test_load_json_file(tmp_path):
    path = tmp_path / "graph.json"
    path.write_text(GraphPayload.from_graph(make_path(3)).model_dump_json())
    assert load_json_file(path, GraphPayload).n == 3
    with pytest.raises(PayloadError):
        load_json_file(tmp_path / "missing.json", GraphPayload)
