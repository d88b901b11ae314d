from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Optional, Union

import networkx as nx

from .cache import MemoCache

Distance = Union[int, float]
INF = math.inf

DIAGONAL_STEPS = ((1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1))
AXIS_STEPS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


class GraphError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CubeCoord:
    i: int
    j: int
    k: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)


@dataclass(frozen=True, order=True)
class ProductVertex:
    h: int
    p: int


Label = Union[CubeCoord, ProductVertex]


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Finite undirected graph on vertices 0..n-1.

    Loops are only allowed on pattern graphs. ``labels`` is an optional
    coordinate table (cube coordinates or product pairs) and does not take
    part in equality.
    """

    n: int
    edges: frozenset[tuple[int, int]] = frozenset()
    loops: frozenset[int] = frozenset()
    pattern: bool = False
    labels: Optional[tuple[Label, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise GraphError(f"vertex count must be nonnegative, got {self.n}")
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"edge {{{u},{u}}} is a loop; loops belong in the loop set")
            if u > v:
                raise GraphError(f"edge ({u},{v}) is not normalized (u < v)")
            if u < 0 or v >= self.n:
                raise GraphError(f"edge ({u},{v}) out of range for n={self.n}")
        if self.loops and not self.pattern:
            raise GraphError("loops are only permitted on pattern graphs")
        for v in self.loops:
            if not 0 <= v < self.n:
                raise GraphError(f"loop at {v} out of range for n={self.n}")
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphError("coordinate table length does not match vertex count")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        loops: Iterable[int] = (),
        *,
        pattern: bool = False,
        labels: Optional[Iterable[Label]] = None,
    ) -> "Graph":
        normalized = set()
        loop_set = set(loops)
        for u, v in edges:
            if u == v:
                if not pattern:
                    raise GraphError(f"edge {{{u},{u}}} is a loop on a non-pattern graph")
                loop_set.add(u)
                continue
            normalized.add(_normalize_edge(u, v))
        return cls(
            n=n,
            edges=frozenset(normalized),
            loops=frozenset(loop_set),
            pattern=pattern,
            labels=tuple(labels) if labels is not None else None,
        )

    @property
    def vertices(self) -> range:
        return range(self.n)

    @cached_property
    def adj(self) -> tuple[frozenset[int], ...]:
        neighbors: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            neighbors[u].add(v)
            neighbors[v].add(u)
        return tuple(frozenset(nbrs) for nbrs in neighbors)

    @cached_property
    def nx_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return nx.freeze(graph)

    @cached_property
    def _distance_tables(self) -> MemoCache:
        return MemoCache(max_entries=max(1, self.n))

    @cached_property
    def label_index(self) -> dict[Label, int]:
        if self.labels is None:
            return {}
        return {label: idx for idx, label in enumerate(self.labels)}

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return u in self.loops
        return _normalize_edge(u, v) in self.edges

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 0 <= v < self.n:
            raise GraphError(f"vertex {v!r} out of range for n={self.n}")

    def distances_from(self, source: int) -> dict[int, int]:
        self.check_vertex(source)
        return self._distance_tables.get_or_compute(source, lambda: _bfs(self.adj, source))

    def distance(self, u: int, v: int) -> Distance:
        return self.distances_from(u).get(v, INF)

    def without_loops(self) -> "Graph":
        return Graph(n=self.n, edges=self.edges, labels=self.labels)


def _bfs(adj: tuple[frozenset[int], ...], source: int, cutoff: Optional[int] = None) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if cutoff is not None and du >= cutoff:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = du + 1
                queue.append(w)
    return dist


@dataclass(frozen=True)
class ColoredGraph:
    """A graph together with named unary predicates."""

    base: Graph
    colors: Mapping[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        normalized: dict[str, frozenset[int]] = {}
        for name, members in self.colors.items():
            if not name:
                raise GraphError("color names must be non-empty")
            members = frozenset(members)
            for v in members:
                if not isinstance(v, int) or not 0 <= v < self.base.n:
                    raise GraphError(f"color {name} references invalid vertex {v!r}")
            normalized[name] = members
        object.__setattr__(self, "colors", normalized)

    @property
    def n(self) -> int:
        return self.base.n

    def color(self, name: str) -> frozenset[int]:
        return self.colors[name]

    def with_colors(self, extra: Mapping[str, Iterable[int]]) -> "ColoredGraph":
        clash = set(extra) & set(self.colors)
        if clash:
            raise GraphError(f"color names already present: {sorted(clash)}")
        merged = dict(self.colors)
        merged.update({name: frozenset(members) for name, members in extra.items()})
        return ColoredGraph(self.base, merged)

    def induced(self, keep: Iterable[int]) -> tuple["ColoredGraph", dict[int, int]]:
        sub, index_map = induced_subgraph(self.base, keep)
        colors = {
            name: frozenset(index_map[v] for v in members if v in index_map)
            for name, members in self.colors.items()
        }
        return ColoredGraph(sub, colors), index_map


def as_colored(graph: Union[Graph, ColoredGraph]) -> ColoredGraph:
    if isinstance(graph, ColoredGraph):
        return graph
    return ColoredGraph(graph)


def cube_index(N: int, coord: CubeCoord) -> int:
    return (coord.i - 1) * N * N + (coord.j - 1) * N + (coord.k - 1)


def _cube_coords(N: int) -> tuple[CubeCoord, ...]:
    return tuple(CubeCoord(i, j, k) for i, j, k in product(range(1, N + 1), repeat=3))


def _cube_with_steps(N: int, steps: Iterable[tuple[int, int, int]]) -> Graph:
    if N < 1:
        raise GraphError(f"cube side must be positive, got {N}")
    coords = _cube_coords(N)
    steps = tuple(steps)
    edges = set()
    for idx, c in enumerate(coords):
        for di, dj, dk in steps:
            partner = CubeCoord(c.i + di, c.j + dj, c.k + dk)
            if partner.i <= N and partner.j <= N and partner.k <= N:
                edges.add((idx, cube_index(N, partner)))
    return Graph(n=N ** 3, edges=frozenset(edges), labels=coords)


def make_cube(N: int) -> Graph:
    """Q_N with vertex (i,j,k) at index (i-1)N^2 + (j-1)N + (k-1)."""
    return _cube_with_steps(N, AXIS_STEPS)


def make_diag_cube(N: int) -> Graph:
    """Q_N plus the four non-decreasing diagonals of every unit cube."""
    return _cube_with_steps(N, AXIS_STEPS + DIAGONAL_STEPS)


def make_path(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"path needs at least one vertex, got {n}")
    return Graph.from_edges(n, ((v, v + 1) for v in range(n - 1)))


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs at least three vertices, got {n}")
    return Graph.from_edges(n, ((v, (v + 1) % n) for v in range(n)))


def make_complete(n: int) -> Graph:
    if n < 0:
        raise GraphError(f"vertex count must be nonnegative, got {n}")
    return Graph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def make_edgeless(n: int) -> Graph:
    return Graph(n=n)


def strong_product(G: Graph, H: Graph) -> Graph:
    """G ⊠ H; vertex (u, x) sits at index u*|H| + x with label ProductVertex(u, x+1)."""
    if G.loops or H.loops:
        raise GraphError("strong product factors must be loop-free")
    width = H.n
    edges = set()
    for u in range(G.n):
        for x in range(H.n):
            a = u * width + x
            for v in G.adj[u] | {u}:
                for y in H.adj[x] | {x}:
                    if v == u and y == x:
                        continue
                    b = v * width + y
                    if a < b:
                        edges.add((a, b))
    labels = tuple(ProductVertex(u, x + 1) for u in range(G.n) for x in range(H.n))
    return Graph(n=G.n * H.n, edges=frozenset(edges), labels=labels)


def ball(G: Graph, center: int, r: int) -> frozenset[int]:
    """Closed ball N_r[center]."""
    G.check_vertex(center)
    if r < 0:
        raise GraphError(f"radius must be nonnegative, got {r}")
    return frozenset(_bfs(G.adj, center, cutoff=r))


def balls(G: Graph, centers: Iterable[int], r: int) -> frozenset[int]:
    result: set[int] = set()
    for c in centers:
        result |= ball(G, c, r)
    return frozenset(result)


def distance_to_set(G: Graph, source: int, targets: frozenset[int]) -> Distance:
    best = INF
    for v, d in G.distances_from(source).items():
        if v in targets and d < best:
            best = d
    return best


@dataclass(frozen=True)
class GraphMetrics:
    connected: bool
    diameter: Distance
    max_degree: int

    def to_dict(self) -> dict:
        return {
            "connected": self.connected,
            "diameter": "inf" if self.diameter == INF else self.diameter,
            "max_degree": self.max_degree,
        }


def graph_metrics(G: Graph) -> GraphMetrics:
    if G.n == 0:
        return GraphMetrics(connected=True, diameter=0, max_degree=0)
    max_degree = max(G.degree(v) for v in G.vertices)
    if not nx.is_connected(G.nx_graph):
        return GraphMetrics(connected=False, diameter=INF, max_degree=max_degree)
    return GraphMetrics(connected=True, diameter=nx.diameter(G.nx_graph), max_degree=max_degree)


def induced_subgraph(G: Graph, A: Iterable[int]) -> tuple[Graph, dict[int, int]]:
    """G[A] with vertices renumbered in increasing order of A."""
    keep = sorted(set(A))
    for v in keep:
        G.check_vertex(v)
    index_map = {old: new for new, old in enumerate(keep)}
    edges = set()
    for old in keep:
        for w in G.adj[old]:
            if w in index_map and old < w:
                edges.add((index_map[old], index_map[w]))
    loops = frozenset(index_map[v] for v in G.loops if v in index_map)
    labels = tuple(G.labels[v] for v in keep) if G.labels is not None else None
    sub = Graph(n=len(keep), edges=frozenset(edges), loops=loops, pattern=G.pattern, labels=labels)
    return sub, index_map


def complement(G: Graph) -> Graph:
    edges = {
        (u, v)
        for u in range(G.n)
        for v in range(u + 1, G.n)
        if (u, v) not in G.edges
    }
    return Graph(n=G.n, edges=frozenset(edges), labels=G.labels)


def disjoint_union(G: Graph, H: Graph) -> Graph:
    shift = G.n
    edges = set(G.edges) | {(u + shift, v + shift) for u, v in H.edges}
    return Graph(n=G.n + H.n, edges=frozenset(edges))


_NAMED_FAMILIES = {
    "P": make_path,
    "C": make_cycle,
    "K": make_complete,
    "E": make_edgeless,
    "Q": make_cube,
    "D": make_diag_cube,
}


def graph_by_name(name: str) -> Graph:
    """Small named graphs: P5 (path), C4 (cycle), K3 (clique), E2 (edgeless), Q3 (cube), D3 (diagonal cube)."""
    name = name.strip()
    family, size = name[:1].upper(), name[1:]
    if family not in _NAMED_FAMILIES or not size.isdigit():
        raise GraphError(f"unknown graph name {name!r}")
    return _NAMED_FAMILIES[family](int(size))
