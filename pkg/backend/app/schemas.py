import json
import math
from pathlib import Path
from typing import Any, Optional, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .flips import FlipStructure, FlipStructureError
from .graphs import ColoredGraph, CubeCoord, Graph, GraphError, ProductVertex
from .logic import FormulaSyntaxError, UnboundVariableError, format_formula
from .slices import EmbeddingError, ProductEmbedding, SliceDecomposition, SliceError
from .transduce import Transduction, TransductionError, TransductionRun

ModelT = TypeVar("ModelT", bound=BaseModel)


class PayloadError(ValueError):
    pass


class GraphPayload(BaseModel):
    n: int
    edges: list[tuple[int, int]] = []
    loops: list[int] = []
    colors: dict[str, list[int]] = {}
    labels: Optional[list[list[int]]] = None
    label_kind: Optional[str] = None

    def to_graph(self, pattern: bool = False) -> Graph:
        labels = None
        if self.labels is not None:
            if self.label_kind == "cube":
                labels = [CubeCoord(*label) for label in self.labels]
            elif self.label_kind == "product":
                labels = [ProductVertex(*label) for label in self.labels]
            else:
                raise PayloadError(f"unknown label kind {self.label_kind!r}")
        return Graph.from_edges(self.n, self.edges, self.loops, pattern=pattern, labels=labels)

    def to_colored(self) -> ColoredGraph:
        return ColoredGraph(self.to_graph(), self.colors)

    @classmethod
    def from_graph(cls, graph: Union[Graph, ColoredGraph]) -> "GraphPayload":
        colors: dict[str, list[int]] = {}
        if isinstance(graph, ColoredGraph):
            colors = {name: sorted(members) for name, members in sorted(graph.colors.items())}
            graph = graph.base
        labels = None
        label_kind = None
        if graph.labels:
            if isinstance(graph.labels[0], CubeCoord):
                label_kind = "cube"
                labels = [list(label.as_tuple()) for label in graph.labels]
            else:
                label_kind = "product"
                labels = [[label.h, label.p] for label in graph.labels]
        return cls(
            n=graph.n,
            edges=sorted(graph.edges),
            loops=sorted(graph.loops),
            colors=colors,
            labels=labels,
            label_kind=label_kind,
        )


class TransductionPayload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    colors: list[str] = []
    psi: str
    declared_range: Optional[int] = Field(default=None, alias="range")

    def to_transduction(self) -> Transduction:
        return Transduction(color_names=tuple(self.colors), psi=self.psi, declared_range=self.declared_range)

    @classmethod
    def from_transduction(cls, transduction: Transduction) -> "TransductionPayload":
        return cls(
            colors=list(transduction.color_names),
            psi=format_formula(transduction.psi),
            declared_range=transduction.declared_range,
        )


class RunPayload(BaseModel):
    coloring: dict[str, list[int]] = {}
    keep: Optional[list[int]] = None

    def to_run(self, n: int) -> TransductionRun:
        keep = range(n) if self.keep is None else self.keep
        return TransductionRun(coloring=self.coloring, keep=frozenset(keep))


class FlipStructurePayload(BaseModel):
    graph: GraphPayload
    k: int
    part_of: list[int]
    H: GraphPayload

    def to_structure(self) -> FlipStructure:
        return FlipStructure(
            graph=self.graph.to_graph(),
            k=self.k,
            part_of=tuple(self.part_of),
            pattern=self.H.to_graph(pattern=True),
        )

    @classmethod
    def from_structure(cls, fs: FlipStructure) -> "FlipStructurePayload":
        return cls(
            graph=GraphPayload.from_graph(fs.graph),
            k=fs.k,
            part_of=list(fs.part_of),
            H=GraphPayload.from_graph(fs.pattern),
        )


class SliceDecompositionPayload(BaseModel):
    parts: list[list[int]]
    guard: dict[int, int] = {}

    def to_decomposition(self) -> SliceDecomposition:
        return SliceDecomposition(parts=tuple(frozenset(part) for part in self.parts), guard=self.guard)

    @classmethod
    def from_decomposition(cls, sd: SliceDecomposition) -> "SliceDecompositionPayload":
        return cls(parts=[sorted(part) for part in sd.parts], guard=dict(sd.guard))


class EmbeddingPayload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    H: GraphPayload
    p: int
    mapping: list[tuple[int, int]] = Field(alias="map")

    def to_embedding(self) -> ProductEmbedding:
        return ProductEmbedding(target=self.H.to_graph(), p=self.p, mapping=tuple(self.mapping))

    @classmethod
    def from_embedding(cls, emb: ProductEmbedding) -> "EmbeddingPayload":
        return cls(H=GraphPayload.from_graph(emb.target), p=emb.p, mapping=list(emb.mapping))


class ExperimentConfig(BaseModel):
    command: str
    name: Optional[str] = None
    seed: int = 0
    budget: int = 200_000
    jobs: int = 1
    params: dict[str, Any] = {}


_DOMAIN_ERRORS = (
    GraphError,
    FlipStructureError,
    EmbeddingError,
    SliceError,
    TransductionError,
    FormulaSyntaxError,
    UnboundVariableError,
)


def parse_payload(raw: Union[str, bytes], model: type[ModelT]) -> ModelT:
    try:
        return model.model_validate_json(raw)
    except ValidationError as exc:
        raise PayloadError(f"invalid {model.__name__}: {exc.errors()[0].get('msg')}") from exc


def load_json_file(path: Union[str, Path], model: type[ModelT]) -> ModelT:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise PayloadError(f"cannot read {path}: {exc}") from exc
    return parse_payload(raw, model)


def build(payload: BaseModel, method: str, *args: Any) -> Any:
    """Call a payload's converter, reporting domain validation failures as PayloadError."""
    try:
        return getattr(payload, method)(*args)
    except _DOMAIN_ERRORS as exc:
        raise PayloadError(str(exc)) from exc


def jsonable(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, BaseModel):
        return value.model_dump(by_alias=True)
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (frozenset, set)):
        return sorted(jsonable(item) for item in value)
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, (CubeCoord, ProductVertex)):
        return list(value.as_tuple()) if isinstance(value, CubeCoord) else [value.h, value.p]
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return value


def dumps(value: Any) -> str:
    return json.dumps(jsonable(value), sort_keys=True)
