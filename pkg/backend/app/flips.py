"""k-flip structures (G, P, H) and executable versions of the cube flip lemmas.

Parts are numbered 1..k. The pattern graph H lives on vertices 0..k-1, where
vertex i-1 stands for part i; a loop flips adjacency inside a part.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

import networkx as nx

from .graphs import (
    INF,
    CubeCoord,
    Graph,
    ball,
    graph_metrics,
    induced_subgraph,
    make_cube,
)
from .reports import FAIL, PASS, make_report

# A cube vertex has at most 6 neighbours, so a part with more than 12 vertices
# always holds a common non-neighbour of any two vertices.
SMALL_PART_LIMIT = 12


class FlipStructureError(ValueError):
    pass


class PreconditionError(ValueError):
    def __init__(self, message: str, witness: object = None) -> None:
        super().__init__(message if witness is None else f"{message}: witness {witness}")
        self.witness = witness


@dataclass(frozen=True)
class FlipStructure:
    graph: Graph
    k: int
    part_of: tuple[int, ...]
    pattern: Graph

    def __post_init__(self) -> None:
        object.__setattr__(self, "part_of", tuple(self.part_of))
        if self.k < 1:
            raise FlipStructureError(f"k must be positive, got {self.k}")
        if self.graph.loops:
            raise FlipStructureError("the flipped graph must be loop-free")
        if len(self.part_of) != self.graph.n:
            raise FlipStructureError("part map length does not match vertex count")
        if self.pattern.n != self.k:
            raise FlipStructureError(f"pattern graph has {self.pattern.n} vertices, expected {self.k}")
        for v, part in enumerate(self.part_of):
            if not 1 <= part <= self.k:
                raise FlipStructureError(f"vertex {v} assigned to part {part} outside [1,{self.k}]")
        used = set(self.part_of)
        for part in range(1, self.k + 1):
            if part not in used and not self.is_isolated(part):
                raise FlipStructureError(f"part {part} is empty but not isolated in the pattern")

    def part(self, index: int) -> frozenset[int]:
        return frozenset(v for v, p in enumerate(self.part_of) if p == index)

    def parts(self) -> dict[int, frozenset[int]]:
        members: dict[int, set[int]] = {i: set() for i in range(1, self.k + 1)}
        for v, p in enumerate(self.part_of):
            members[p].add(v)
        return {i: frozenset(vs) for i, vs in members.items()}

    def flips(self, a: int, b: int) -> bool:
        """Whether parts a and b (1-based, possibly equal) are complemented."""
        return self.pattern.has_edge(a - 1, b - 1)

    def is_isolated(self, part: int) -> bool:
        h = part - 1
        return not self.pattern.adj[h] and h not in self.pattern.loops


def pattern_graph(k: int, edges: Iterable[tuple[int, int]] = (), loops: Iterable[int] = ()) -> Graph:
    """Pattern graph from 1-based part pairs and looped parts."""
    return Graph.from_edges(
        k,
        ((a - 1, b - 1) for a, b in edges),
        (a - 1 for a in loops),
        pattern=True,
    )


def apply_flip(fs: FlipStructure) -> Graph:
    """F(G, P, H): complement adjacency between every pair of parts joined in H."""
    edges = set(fs.graph.edges)
    parts = fs.parts()
    for a, b in fs.pattern.edges:
        for u in parts[a + 1]:
            for v in parts[b + 1]:
                edges ^= {(u, v) if u < v else (v, u)}
    for a in fs.pattern.loops:
        members = sorted(parts[a + 1])
        for idx, u in enumerate(members):
            for v in members[idx + 1:]:
                edges ^= {(u, v)}
    return Graph(n=fs.graph.n, edges=frozenset(edges), labels=fs.graph.labels)


def substructure(fs: FlipStructure, A: Iterable[int]) -> FlipStructure:
    """Flip substructure on A (renumbered in increasing order), emptied parts isolated."""
    sub, index_map = induced_subgraph(fs.graph, A)
    part_of = [0] * sub.n
    for old, new in index_map.items():
        part_of[new] = fs.part_of[old]
    present = set(part_of)
    edges = [
        (a, b)
        for a, b in fs.pattern.edges
        if a + 1 in present and b + 1 in present
    ]
    loops = [a for a in fs.pattern.loops if a + 1 in present]
    pattern = Graph.from_edges(fs.k, edges, loops, pattern=True)
    return FlipStructure(graph=sub, k=fs.k, part_of=tuple(part_of), pattern=pattern)


def isolated_parts(fs: FlipStructure) -> frozenset[int]:
    return frozenset(i for i in range(1, fs.k + 1) if fs.is_isolated(i))


def unaffected_set(fs: FlipStructure) -> frozenset[int]:
    isolated = isolated_parts(fs)
    return frozenset(v for v, p in enumerate(fs.part_of) if p in isolated)


def _radius_inside(graph: Graph, v: int, inside: frozenset[int]) -> int:
    """Largest r with N_r[v] inside the set, capped at the eccentricity of v."""
    dist = {v: 0}
    queue = deque([v])
    ecc = 0
    while queue:
        u = queue.popleft()
        for w in graph.adj[u]:
            if w in dist:
                continue
            dist[w] = dist[u] + 1
            if w not in inside:
                return dist[w] - 1
            ecc = max(ecc, dist[w])
            queue.append(w)
    return ecc


def flip_lambda(fs: FlipStructure) -> Optional[int]:
    """Largest radius of a ball of G inside the unaffected set, None when that set is empty."""
    inside = unaffected_set(fs)
    if not inside:
        return None
    return max(_radius_inside(fs.graph, v, inside) for v in sorted(inside))


def coverage_radius(fs: FlipStructure) -> float:
    """max over v of the distance from v to a vertex in a non-isolated part."""
    affected = frozenset(range(fs.graph.n)) - unaffected_set(fs)
    if not affected:
        return INF
    dist = _multi_source_distances(fs.graph, affected)
    if len(dist) < fs.graph.n:
        return INF
    return max(dist.values()) if dist else 0


def _multi_source_distances(
    graph: Graph, sources: Iterable[int], cutoff: Optional[int] = None
) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(dist)
    while queue:
        u = queue.popleft()
        if cutoff is not None and dist[u] >= cutoff:
            continue
        for w in graph.adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


# ---------------------------------------------------------------------------
# Cube witnesses


@dataclass(frozen=True)
class CubeBox:
    lo: CubeCoord
    side: int

    def contains(self, c: CubeCoord) -> bool:
        return all(
            low <= x < low + self.side
            for low, x in zip(self.lo.as_tuple(), c.as_tuple())
        )


def verify_cube_witness(fs: FlipStructure) -> CubeBox:
    """Check that F(fs) is a cube, as witnessed by the graph's coordinate table."""
    labels = fs.graph.labels
    if not labels or not all(isinstance(c, CubeCoord) for c in labels):
        raise PreconditionError("flip structure carries no cube coordinate table")
    lo = CubeCoord(*(min(axis) for axis in zip(*(c.as_tuple() for c in labels))))
    hi = CubeCoord(*(max(axis) for axis in zip(*(c.as_tuple() for c in labels))))
    sides = {h - l + 1 for l, h in zip(lo.as_tuple(), hi.as_tuple())}
    if len(sides) != 1:
        raise PreconditionError("coordinates do not span a cube", [lo.as_tuple(), hi.as_tuple()])
    side = sides.pop()
    if side ** 3 != fs.graph.n or len(set(labels)) != fs.graph.n:
        raise PreconditionError("coordinates do not fill a cube", side)
    flipped = apply_flip(fs)
    index = {c: v for v, c in enumerate(labels)}
    expected = set()
    for v, c in enumerate(labels):
        for di, dj, dk in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            w = index.get(CubeCoord(c.i + di, c.j + dj, c.k + dk))
            if w is not None:
                expected.add((v, w) if v < w else (w, v))
    if expected != flipped.edges:
        diff = sorted(expected ^ flipped.edges)
        raise PreconditionError("flipped graph is not the witnessed cube", list(diff[0]))
    return CubeBox(lo=lo, side=side)


def rebase_cube_labels(graph: Graph) -> Graph:
    """Shift cube coordinates so the smallest corner is (1,1,1)."""
    lo = [min(axis) for axis in zip(*(c.as_tuple() for c in graph.labels))]
    labels = tuple(CubeCoord(c.i - lo[0] + 1, c.j - lo[1] + 1, c.k - lo[2] + 1) for c in graph.labels)
    return Graph(n=graph.n, edges=graph.edges, labels=labels)


def _rebased(fs: FlipStructure) -> FlipStructure:
    if fs.graph.n == 0:
        return fs
    return FlipStructure(
        graph=rebase_cube_labels(fs.graph), k=fs.k, part_of=fs.part_of, pattern=fs.pattern
    )


def find_cube_in_ball(fs: FlipStructure, v: int, r: int) -> frozenset[int]:
    """Vertices of an induced cube of side max(1, r // 3) inside N_r[v]."""
    box = verify_cube_witness(fs)
    fs.graph.check_vertex(v)
    if r < 0 or r > box.side:
        raise PreconditionError(f"radius must lie in [0, {box.side}]", r)
    inside = unaffected_set(fs)
    around = ball(fs.graph, v, r)
    outside = sorted(around - inside)
    if outside:
        raise PreconditionError("ball leaves the unaffected set", outside[0])
    s = max(1, r // 3)
    center = fs.graph.labels[v]
    corner = []
    for low, x in zip(box.lo.as_tuple(), center.as_tuple()):
        start = x - (s - 1) // 2
        corner.append(min(max(start, low), low + box.side - s))
    sub_box = CubeBox(lo=CubeCoord(*corner), side=s)
    found = frozenset(u for u, c in enumerate(fs.graph.labels) if sub_box.contains(c))
    if not found <= around:
        raise PreconditionError("extracted cube leaves the ball", sorted(found - around)[0])
    return found


def subcube_blocks(fs: FlipStructure) -> dict[tuple[int, int, int], frozenset[int]]:
    """The 27 blocks of side N of a witnessed Q_{3N}, keyed by (a,b,c) in {0,1,2}^3."""
    box = verify_cube_witness(fs)
    if box.side % 3:
        raise PreconditionError("cube side is not divisible by 3", box.side)
    n = box.side // 3
    blocks: dict[tuple[int, int, int], set[int]] = {key: set() for key in product(range(3), repeat=3)}
    for v, c in enumerate(fs.graph.labels):
        key = tuple((x - low) // n for x, low in zip(c.as_tuple(), box.lo.as_tuple()))
        blocks[key].add(v)
    return {key: frozenset(vs) for key, vs in blocks.items()}


def extract_avoiding_subcube(fs: FlipStructure, i: int) -> FlipStructure:
    """Substructure on the lexicographically first block missing part i."""
    members = fs.part(i)
    if len(members) > SMALL_PART_LIMIT:
        raise PreconditionError(
            f"part {i} has {len(members)} > {SMALL_PART_LIMIT} vertices", i
        )
    for key, block in sorted(subcube_blocks(fs).items()):
        if not block & members:
            return _rebased(substructure(fs, block))
    raise PreconditionError("no block avoids the part", i)


def eliminate_small_parts(fs: FlipStructure) -> FlipStructure:
    """Repeatedly drop the smallest-index nonempty part of size <= 12 by block extraction."""
    current = fs
    while True:
        small = [
            i for i, members in sorted(current.parts().items())
            if 0 < len(members) <= SMALL_PART_LIMIT
        ]
        if not small:
            return current
        current = extract_avoiding_subcube(current, small[0])


# ---------------------------------------------------------------------------
# Lemma checkers


def _require_large_parts(fs: FlipStructure, indices: Iterable[int]) -> None:
    for i in indices:
        size = len(fs.part(i))
        if size <= SMALL_PART_LIMIT:
            raise PreconditionError(f"part {i} has only {size} vertices", i)


def _require_nonempty_parts_large(fs: FlipStructure) -> None:
    for i, members in fs.parts().items():
        if 0 < len(members) <= SMALL_PART_LIMIT:
            raise PreconditionError(f"part {i} has only {len(members)} vertices", i)


def _max_pair_distance(graph: Graph, vertices: frozenset[int]) -> tuple[float, Optional[list[int]]]:
    worst = 0
    witness = None
    ordered = sorted(vertices)
    for u in ordered:
        dist = graph.distances_from(u)
        for v in ordered:
            d = dist.get(v, INF)
            if d > worst:
                worst = d
                witness = [u, v]
    return worst, witness


def check_small_dist(fs: FlipStructure, i: int, j: int) -> dict:
    """dist_G(u, v) <= 3 for all u, v in V_i ∪ V_j when ij is an edge (or loop) of H."""
    verify_cube_witness(fs)
    if not fs.flips(i, j):
        raise PreconditionError(f"parts {i} and {j} are not joined in the pattern", [i, j])
    _require_large_parts(fs, {i, j})
    worst, witness = _max_pair_distance(fs.graph, fs.part(i) | fs.part(j))
    status = PASS if worst <= 3 else FAIL
    return make_report(
        status,
        witness=witness if status == FAIL else None,
        realized_bound=worst,
        bound=3,
        parts=[i, j],
    )


def check_connected(fs: FlipStructure) -> dict:
    verify_cube_witness(fs)
    _require_nonempty_parts_large(fs)
    graph = fs.graph
    if graph.n == 0:
        return make_report(PASS, components=0)
    components = sorted(
        (sorted(c) for c in nx.connected_components(graph.nx_graph)), key=lambda c: c[0]
    )
    if len(components) == 1:
        return make_report(PASS, components=1)
    return make_report(
        FAIL, witness=[components[0][0], components[1][0]], components=len(components)
    )


def pattern_components(fs: FlipStructure) -> list[frozenset[int]]:
    """Components of H - I(H), as sets of 1-based part indices, ordered by smallest index."""
    isolated = isolated_parts(fs)
    active = nx.Graph()
    active.add_nodes_from(i for i in range(1, fs.k + 1) if i not in isolated)
    active.add_edges_from((a + 1, b + 1) for a, b in fs.pattern.edges)
    comps = [frozenset(c) for c in nx.connected_components(active)]
    return sorted(comps, key=min)


def component_vertices(fs: FlipStructure, component: Iterable[int]) -> frozenset[int]:
    """U(C): the union of the parts in a pattern component."""
    component = set(component)
    return frozenset(v for v, p in enumerate(fs.part_of) if p in component)


def check_component_diameter(fs: FlipStructure) -> dict:
    """diam G[U(C)] <= 3|C| for every component C of H - I(H)."""
    verify_cube_witness(fs)
    _require_nonempty_parts_large(fs)
    records = []
    failure = None
    for comp in pattern_components(fs):
        block = component_vertices(fs, comp)
        sub, index_map = induced_subgraph(fs.graph, block)
        diameter = graph_metrics(sub).diameter
        bound = 3 * len(comp)
        records.append(
            {
                "component": sorted(comp),
                "size": len(block),
                "diameter": "inf" if diameter == INF else diameter,
                "bound": bound,
            }
        )
        if diameter > bound and failure is None:
            failure = {"component": sorted(comp), "diameter": diameter}
    if failure:
        return make_report(FAIL, witness=failure, components=records)
    worst = max((rec["diameter"] for rec in records), default=0)
    return make_report(PASS, realized_bound=worst, components=records)


def auxiliary_K(fs: FlipStructure, alpha: int) -> tuple[Graph, list[frozenset[int]]]:
    """Components of H - I(H), adjacent when G joins their vertex blocks by a path of length <= 2α+1."""
    comps = pattern_components(fs)
    blocks = [component_vertices(fs, comp) for comp in comps]
    owner = {v: idx for idx, block in enumerate(blocks) for v in block}
    threshold = 2 * alpha + 1
    edges = set()
    for idx, block in enumerate(blocks):
        reached = _multi_source_distances(fs.graph, block, cutoff=threshold)
        for v in reached:
            other = owner.get(v)
            if other is not None and other != idx:
                edges.add((min(idx, other), max(idx, other)))
    return Graph(n=len(comps), edges=frozenset(edges)), comps


def check_diameter_bound(fs: FlipStructure, alpha: int, k: Optional[int] = None) -> dict:
    """K connected and diam(G) <= 2kα + 4k, given every vertex is within α of an affected part."""
    verify_cube_witness(fs)
    _require_nonempty_parts_large(fs)
    if alpha < 0:
        raise PreconditionError("alpha must be nonnegative", alpha)
    coverage = coverage_radius(fs)
    if coverage > alpha:
        raise PreconditionError(
            f"some vertex is {coverage} away from every affected part (alpha={alpha})", coverage
        )
    k = fs.k if k is None else k
    bound = 2 * k * alpha + 4 * k
    K, comps = auxiliary_K(fs, alpha)
    k_metrics = graph_metrics(K)
    metrics = graph_metrics(fs.graph)
    details = {
        "bound": bound,
        "alpha": alpha,
        "lambda": flip_lambda(fs),
        "coverage": coverage,
        "k_components": [sorted(c) for c in comps],
        "k_edges": sorted(list(e) for e in K.edges),
        "k_connected": k_metrics.connected,
    }
    if not k_metrics.connected:
        return make_report(FAIL, witness={"auxiliary_components": len(comps)}, **details)
    diameter = metrics.diameter
    if diameter > bound:
        return make_report(FAIL, witness={"diameter": diameter}, realized_bound=diameter, **details)
    return make_report(PASS, realized_bound=diameter, **details)


# ---------------------------------------------------------------------------
# Instance generators


def flip_cube(N: int, part_of: Iterable[int], pattern: Graph) -> FlipStructure:
    """(G, P, H) with G := F(Q_N, P, H), so that F(G, P, H) = Q_N."""
    cube = make_cube(N)
    seed_structure = FlipStructure(graph=cube, k=pattern.n, part_of=tuple(part_of), pattern=pattern)
    flipped = apply_flip(seed_structure)
    return FlipStructure(graph=flipped, k=pattern.n, part_of=seed_structure.part_of, pattern=pattern)


def random_partition(n: int, k: int, rng: random.Random, min_part_size: int = 0) -> list[int]:
    if min_part_size * k > n:
        raise FlipStructureError(f"cannot split {n} vertices into {k} parts of size >= {min_part_size}")
    order = list(range(n))
    rng.shuffle(order)
    part_of = [0] * n
    for idx, v in enumerate(order):
        if idx < min_part_size * k:
            part_of[v] = idx // min_part_size + 1 if min_part_size else 1
        else:
            part_of[v] = rng.randint(1, k)
    return part_of


def random_pattern(
    k: int,
    rng: random.Random,
    isolated: Iterable[int] = (),
    density: float = 0.5,
) -> Graph:
    """Random pattern on k parts; parts listed in ``isolated`` stay untouched, at least one pair flips."""
    isolated = set(isolated)
    active = [i for i in range(1, k + 1) if i not in isolated]
    edges = [(a, b) for idx, a in enumerate(active) for b in active[idx + 1:] if rng.random() < density]
    loops = [a for a in active if rng.random() < density]
    if active and not edges and not loops:
        loops = [active[0]]
    return pattern_graph(k, edges, loops)


def flipped_cube_instance(
    N: int,
    k: int,
    seed: int,
    *,
    min_part_size: int = SMALL_PART_LIMIT + 1,
    isolated: Iterable[int] = (),
) -> FlipStructure:
    """Seeded flipped cube with every part nonempty and at least ``min_part_size`` large."""
    rng = random.Random(seed)
    part_of = random_partition(N ** 3, k, rng, min_part_size)
    pattern = random_pattern(k, rng, isolated)
    return flip_cube(N, part_of, pattern)


def small_part_instance(N: int, k: int, seed: int, size: int) -> FlipStructure:
    """Seeded flipped cube whose part 1 has exactly ``size`` vertices and parts 2..k are nonempty."""
    n = N ** 3
    if k < 2 or not 0 < size <= n - (k - 1):
        raise FlipStructureError(f"cannot place a part of size {size} beside {k - 1} parts in Q_{N}")
    rng = random.Random(seed)
    small = set(rng.sample(range(n), size))
    rest = iter(random_partition(n - size, k - 1, rng, min_part_size=1))
    part_of = [1 if v in small else next(rest) + 1 for v in range(n)]
    return flip_cube(N, part_of, random_pattern(k, rng))


def random_substructure(fs: FlipStructure, rng: random.Random, size: int) -> FlipStructure:
    size = max(0, min(size, fs.graph.n))
    return substructure(fs, rng.sample(range(fs.graph.n), size))


def check_all_flip_lemmas(fs: FlipStructure, alpha: Optional[int] = None) -> dict:
    """Run every checker whose preconditions hold on a flipped-cube instance."""
    results: dict[str, dict] = {}
    for i in range(1, fs.k + 1):
        for j in range(i, fs.k + 1):
            if fs.flips(i, j):
                results[f"small-dist:{i}-{j}"] = check_small_dist(fs, i, j)
    results["connected"] = check_connected(fs)
    results["component-diameter"] = check_component_diameter(fs)
    coverage = coverage_radius(fs)
    if coverage != INF:
        chosen = int(coverage) if alpha is None else alpha
        results["diameter-bound"] = check_diameter_bound(fs, chosen)
    return results
