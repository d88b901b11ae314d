"""Slice decompositions built from product embeddings G ⊆ H ⊠ P_p.

Slices and windows are numbered from 1. A slice groups ``d`` consecutive
path layers; a window is ``k`` consecutive slices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .graphs import ColoredGraph, Graph, as_colored, ball, induced_subgraph, make_path, strong_product
from .logic import Formula, as_formula, interpretation_pairs
from .reports import BOUND_ONLY, FAIL, PASS, make_report, merge_status
from .width import (
    CLIQUEWIDTH,
    CLIQUEWIDTH_EXACT_LIMIT,
    WidthResult,
    cliquewidth_exact_tiny,
    cliquewidth_lower,
    cliquewidth_upper,
    treewidth_exact,
)


class EmbeddingError(ValueError):
    pass


class SliceError(ValueError):
    pass


@dataclass(frozen=True)
class ProductEmbedding:
    """Map v -> (h, pos) with h a vertex of ``target`` and pos in [1, p]."""

    target: Graph
    p: int
    mapping: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", tuple(tuple(entry) for entry in self.mapping))
        if self.p < 1:
            raise EmbeddingError(f"path length must be positive, got {self.p}")
        if self.target.loops:
            raise EmbeddingError("embedding target must be loop-free")
        for v, (h, pos) in enumerate(self.mapping):
            if not 0 <= h < self.target.n:
                raise EmbeddingError(f"vertex {v} maps to unknown target vertex {h}")
            if not 1 <= pos <= self.p:
                raise EmbeddingError(f"vertex {v} maps to position {pos} outside [1,{self.p}]")

    def position(self, v: int) -> int:
        return self.mapping[v][1]


def verify_embedding(graph: Graph, emb: ProductEmbedding) -> dict:
    if len(emb.mapping) != graph.n:
        return make_report(FAIL, witness={"mapped": len(emb.mapping), "vertices": graph.n}, violation="size")
    seen: dict[tuple[int, int], int] = {}
    for v, image in enumerate(emb.mapping):
        if image in seen:
            return make_report(FAIL, witness=[seen[image], v], violation="injective")
        seen[image] = v
    for u, v in sorted(graph.edges):
        (hu, pu), (hv, pv) = emb.mapping[u], emb.mapping[v]
        if abs(pu - pv) > 1 or not (hu == hv or emb.target.has_edge(hu, hv)):
            return make_report(FAIL, witness=[u, v], violation="edge")
    return make_report(PASS, p=emb.p)


def _require_valid(graph: Graph, emb: ProductEmbedding) -> None:
    report = verify_embedding(graph, emb)
    if report["status"] != PASS:
        raise EmbeddingError(f"invalid embedding ({report['violation']}): witness {report['witness']}")


def layers(graph: Graph, emb: ProductEmbedding) -> tuple[frozenset[int], ...]:
    """U_1..U_p: the vertices at each path position."""
    _require_valid(graph, emb)
    buckets: list[set[int]] = [set() for _ in range(emb.p)]
    for v, (_, pos) in enumerate(emb.mapping):
        buckets[pos - 1].add(v)
    return tuple(frozenset(b) for b in buckets)


def identity_embedding(H: Graph, p: int) -> tuple[Graph, ProductEmbedding]:
    product = strong_product(H, make_path(p))
    mapping = tuple((u, x + 1) for u in range(H.n) for x in range(p))
    return product, ProductEmbedding(target=H, p=p, mapping=mapping)


def _grid_target(N: int) -> Graph:
    return strong_product(make_path(N), make_path(N))


def cube_axis_embedding(N: int) -> ProductEmbedding:
    """(i,j,k) -> ((i,k), j) into (P_N ⊠ P_N) ⊠ P_N; also valid for the diagonal cube."""
    mapping = tuple(
        ((i - 1) * N + (k - 1), j)
        for i in range(1, N + 1)
        for j in range(1, N + 1)
        for k in range(1, N + 1)
    )
    return ProductEmbedding(target=_grid_target(N), p=N, mapping=mapping)


def cube_corner_embedding(N: int) -> ProductEmbedding:
    """(i,j,k) -> ((i,j), i+j+k-2) into (P_N ⊠ P_N) ⊠ P_{3N-2}; valid for Q_N only."""
    mapping = tuple(
        ((i - 1) * N + (j - 1), i + j + k - 2)
        for i in range(1, N + 1)
        for j in range(1, N + 1)
        for k in range(1, N + 1)
    )
    return ProductEmbedding(target=_grid_target(N), p=max(1, 3 * N - 2), mapping=mapping)


@dataclass(frozen=True)
class SliceDecomposition:
    parts: tuple[frozenset[int], ...]
    guard: Mapping[int, int] = field(default_factory=dict)
    layers: Optional[tuple[frozenset[int], ...]] = None
    d: Optional[int] = None
    r: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(frozenset(part) for part in self.parts))
        object.__setattr__(self, "guard", {int(k): int(v) for k, v in self.guard.items()})
        if not self.parts:
            raise SliceError("a slice decomposition needs at least one part")
        seen: set[int] = set()
        for idx, part in enumerate(self.parts, start=1):
            overlap = seen & part
            if overlap:
                raise SliceError(f"vertex {min(overlap)} appears in more than one part (part {idx})")
            seen |= part

    @property
    def length(self) -> int:
        return len(self.parts)

    def part_index(self) -> dict[int, int]:
        return {v: idx for idx, part in enumerate(self.parts, start=1) for v in part}

    def check_covers(self, n: int) -> None:
        covered = set().union(*self.parts)
        if covered != set(range(n)):
            missing = sorted(set(range(n)) - covered)
            extra = sorted(covered - set(range(n)))
            raise SliceError(f"parts do not partition the vertices (missing {missing[:5]}, extra {extra[:5]})")


def build_slice_decomposition(
    graph: Graph,
    emb: ProductEmbedding,
    d: int,
    r: int = 0,
    guard: Optional[Mapping[int, int]] = None,
) -> SliceDecomposition:
    if d < 1:
        raise SliceError(f"slice width d must be positive, got {d}")
    if r < 0:
        raise SliceError(f"locality radius must be nonnegative, got {r}")
    fibers = layers(graph, emb)
    count = math.ceil(emb.p / d)
    parts = tuple(
        frozenset().union(*fibers[d * (i - 1): d * i]) for i in range(1, count + 1)
    )
    return SliceDecomposition(parts=parts, guard=guard or {}, layers=fibers, d=d, r=r)


def verify_condition_i(graph: Graph, sd: SliceDecomposition) -> dict:
    """Every edge stays inside a part or joins consecutive parts."""
    sd.check_covers(graph.n)
    index = sd.part_index()
    for u, v in sorted(graph.edges):
        if abs(index[u] - index[v]) > 1:
            return make_report(FAIL, witness=[u, v], parts=[index[u], index[v]])
    return make_report(PASS, parts=sd.length)


def window(sd: SliceDecomposition, i: int, k: int) -> frozenset[int]:
    """V_i ∪ ... ∪ V_{i+k-1}, cut off at the last part."""
    if not 1 <= i <= sd.length:
        raise SliceError(f"window start {i} outside [1,{sd.length}]")
    if k < 1:
        raise SliceError(f"window size must be positive, got {k}")
    return frozenset().union(*sd.parts[i - 1: i - 1 + k])


def extended_window(
    fibers: Sequence[frozenset[int]],
    i: int,
    k: int,
    d: int,
    r: int,
    graph: Optional[Graph] = None,
) -> frozenset[int]:
    """Layers d(i-1)+1-r .. d(i+k-1)+r, clamped to [1, p].

    With ``graph`` given, N_r[v] ⊆ S′ is checked for every v in the window.
    """
    p = len(fibers)
    if d < 1 or k < 1 or r < 0:
        raise SliceError("window parameters must satisfy d >= 1, k >= 1, r >= 0")
    first = d * (i - 1) + 1
    if not 1 <= first <= p:
        raise SliceError(f"window start {i} outside the {p} layers")
    last = min(p, d * (i + k - 1))
    extended = frozenset().union(*fibers[max(1, first - r) - 1: min(p, last + r)])
    if graph is not None:
        core = frozenset().union(*fibers[first - 1: last])
        for v in sorted(core):
            outside = ball(graph, v, r) - extended
            if outside:
                raise SliceError(f"ball of radius {r} around {v} leaves the extended window at {min(outside)}")
    return extended


def check_locality_window(
    graph: Union[Graph, ColoredGraph],
    rho: Union[str, Formula],
    S: Iterable[int],
    S_prime: Iterable[int],
) -> dict:
    """rho(G)[S] against rho(G[S′]) restricted to S, pair by pair."""
    graph = as_colored(graph)
    rho = as_formula(rho)
    S = frozenset(S)
    S_prime = frozenset(S_prime)
    if not S <= S_prime:
        raise SliceError("window is not contained in its extension")
    global_pairs = {(u, v) for u, v in interpretation_pairs(graph, rho) if u in S and v in S}
    local_graph, index_map = graph.induced(S_prime)
    back = {new: old for old, new in index_map.items()}
    local_pairs = {
        (back[u], back[v])
        for u, v in interpretation_pairs(local_graph, rho)
        if back[u] in S and back[v] in S
    }
    mismatch = sorted(global_pairs ^ local_pairs)
    if mismatch:
        u, v = mismatch[0]
        return make_report(
            FAIL,
            witness=[u, v],
            global_value=(u, v) in global_pairs,
            local_value=(u, v) in local_pairs,
            window=len(S),
        )
    return make_report(PASS, window=len(S), extended=len(S_prime), pairs=len(global_pairs))


def _window_widths(graph: Graph, budget: Optional[int], cw_exact_limit: int) -> tuple[WidthResult, WidthResult]:
    tw = treewidth_exact(graph, budget)
    if graph.n <= cw_exact_limit:
        cw = cliquewidth_exact_tiny(graph, budget=budget)
    else:
        cw = WidthResult(CLIQUEWIDTH, cliquewidth_lower(graph), cliquewidth_upper(graph, tw.upper), False)
    return tw, cw


def window_starts(sd: SliceDecomposition, k: int) -> range:
    return range(1, max(1, sd.length - k + 1) + 1)


def verify_condition_ii(
    graph: Graph,
    sd: SliceDecomposition,
    k: int,
    budget: Optional[int] = None,
    cw_exact_limit: int = CLIQUEWIDTH_EXACT_LIMIT,
) -> dict:
    """Per-window treewidth and cliquewidth, compared with the guard for k when one is claimed."""
    sd.check_covers(graph.n)
    claimed = sd.guard.get(k)
    records = []
    for i in window_starts(sd, k):
        sub, _ = induced_subgraph(graph, window(sd, i, k))
        tw, cw = _window_widths(sub, budget, cw_exact_limit)
        if claimed is not None and cw.lower > claimed:
            status = FAIL
        elif claimed is not None and cw.upper <= claimed:
            status = PASS
        elif claimed is None and tw.exact and cw.exact:
            status = PASS
        else:
            status = BOUND_ONLY
        records.append(
            {
                "key": f"window:{i}:{k}",
                "start": i,
                "size": sub.n,
                "status": status,
                "treewidth": {"lower": tw.lower, "upper": tw.upper, "exact": tw.exact},
                "cliquewidth": {"lower": cw.lower, "upper": cw.upper, "exact": cw.exact},
            }
        )
    status = merge_status(rec["status"] for rec in records)
    failing = next((rec for rec in records if rec["status"] == FAIL), None)
    return make_report(
        status,
        witness={"window": failing["start"]} if failing else None,
        realized_bound=max(rec["cliquewidth"]["upper"] for rec in records),
        guard=claimed,
        k=k,
        windows=records,
    )


def slice_window_tw_bound(k: int, d: int, r: int, tw_target: int) -> int:
    """(kd + 2r)(tw(H) + 1) - 1."""
    return (k * d + 2 * r) * (tw_target + 1) - 1


def check_window_tw_bound(
    graph: Graph,
    sd: SliceDecomposition,
    emb: ProductEmbedding,
    k: int,
    budget: Optional[int] = None,
) -> dict:
    """Treewidth of every extended window against the product bound."""
    if sd.layers is None or sd.d is None:
        raise SliceError("decomposition was not built from an embedding")
    r = sd.r or 0
    target = treewidth_exact(emb.target, budget)
    bound = slice_window_tw_bound(k, sd.d, r, target.upper)
    records = []
    for i in window_starts(sd, k):
        extended = extended_window(sd.layers, i, k, sd.d, r, graph)
        sub, _ = induced_subgraph(graph, extended)
        tw = treewidth_exact(sub, budget)
        if tw.lower > bound:
            status = FAIL
        elif tw.upper <= bound and target.exact:
            status = PASS
        else:
            status = BOUND_ONLY
        records.append(
            {
                "key": f"window:{i}:{k}",
                "start": i,
                "size": sub.n,
                "lower": tw.lower,
                "upper": tw.upper,
                "status": status,
            }
        )
    failing = next((rec for rec in records if rec["status"] == FAIL), None)
    return make_report(
        merge_status(rec["status"] for rec in records),
        witness={"window": failing["start"], "treewidth": failing["lower"]} if failing else None,
        realized_bound=max(rec["upper"] for rec in records),
        bound=bound,
        target_treewidth=target.upper,
        windows=records,
    )


def even_odd_split(sd: SliceDecomposition) -> tuple[frozenset[int], frozenset[int]]:
    """(union of even-indexed slices, union of odd-indexed slices)."""
    even = frozenset().union(*sd.parts[1::2])
    odd = frozenset().union(*sd.parts[0::2])
    return even, odd


def check_even_split(graph: Graph, sd: SliceDecomposition, budget: Optional[int] = None) -> dict:
    """G[A_1] splits into the even slices: no edge between two of them, treewidth is the max."""
    sd.check_covers(graph.n)
    index = sd.part_index()
    even, odd = even_odd_split(sd)
    for u, v in sorted(graph.edges):
        if u in even and v in even and index[u] != index[v]:
            return make_report(FAIL, witness=[u, v], parts=[index[u], index[v]])
    per_slice = []
    for idx in range(2, sd.length + 1, 2):
        sub, _ = induced_subgraph(graph, sd.parts[idx - 1])
        per_slice.append(treewidth_exact(sub, budget))
    whole = treewidth_exact(induced_subgraph(graph, even)[0], budget)
    slice_max = max((tw.upper for tw in per_slice), default=0)
    exact = whole.exact and all(tw.exact for tw in per_slice)
    details = {
        "even_size": len(even),
        "odd_size": len(odd),
        "even_treewidth": whole.upper,
        "slice_treewidths": [tw.upper for tw in per_slice],
    }
    if exact and whole.upper != slice_max:
        return make_report(FAIL, witness={"even_treewidth": whole.upper, "slice_max": slice_max}, **details)
    return make_report(PASS if exact else BOUND_ONLY, realized_bound=whole.upper, **details)
