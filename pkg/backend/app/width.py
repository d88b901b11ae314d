"""Treewidth and cliquewidth: exact search on small graphs, bounds elsewhere.

Every exact answer carries a certificate that re-verifies independently of
the search that produced it: tree decompositions for treewidth and label
expressions for cliquewidth.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterator, Optional

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_degree, treewidth_min_fill_in

from .graphs import Graph, induced_subgraph, make_path, strong_product
from .logs import get_logger
from .reports import BOUND_ONLY, FAIL, PASS, make_report
from .settings import default_budget, get_bool_env

TREEWIDTH = "treewidth"
CLIQUEWIDTH = "cliquewidth"
CLIQUEWIDTH_EXACT_LIMIT = 12


class WidthError(ValueError):
    pass


class _BudgetExceeded(Exception):
    pass


class _Budget:
    def __init__(self, limit: int) -> None:
        self.limit = max(1, limit)
        self.used = 0

    def tick(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise _BudgetExceeded


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    edges: tuple[tuple[int, int], ...] = ()

    @property
    def width(self) -> int:
        return max((len(bag) - 1 for bag in self.bags), default=0)

    def to_dict(self) -> dict:
        return {"bags": [sorted(bag) for bag in self.bags], "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "TreeDecomposition":
        return cls(
            bags=tuple(frozenset(bag) for bag in data.get("bags", [])),
            edges=tuple(tuple(e) for e in data.get("edges", [])),
        )


@dataclass(frozen=True)
class WidthResult:
    kind: str
    lower: int
    upper: int
    exact: bool
    certificate: Optional[Any] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise WidthError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.exact and self.lower != self.upper:
            raise WidthError("exact result with distinct bounds")

    @property
    def value(self) -> Optional[int]:
        return self.upper if self.exact else None

    def to_dict(self) -> dict:
        certificate = self.certificate
        if isinstance(certificate, TreeDecomposition):
            certificate = certificate.to_dict()
        return {
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "certificate": certificate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WidthResult":
        certificate = data.get("certificate")
        if data.get("kind") == TREEWIDTH and isinstance(certificate, dict):
            certificate = TreeDecomposition.from_dict(certificate)
        return cls(
            kind=data["kind"],
            lower=int(data["lower"]),
            upper=int(data["upper"]),
            exact=bool(data["exact"]),
            certificate=certificate,
        )


# ---------------------------------------------------------------------------
# Tree decompositions


def verify_tree_decomposition(graph: Graph, td: TreeDecomposition) -> int:
    """Return the width of ``td`` after checking it decomposes ``graph``."""
    if graph.n == 0:
        return 0
    tree = nx.Graph()
    tree.add_nodes_from(range(len(td.bags)))
    for a, b in td.edges:
        if not (0 <= a < len(td.bags) and 0 <= b < len(td.bags)):
            raise WidthError(f"decomposition edge ({a},{b}) refers to a missing bag")
        tree.add_edge(a, b)
    if not td.bags or not nx.is_tree(tree):
        raise WidthError("decomposition bags do not form a tree")
    holders: dict[int, list[int]] = {v: [] for v in range(graph.n)}
    for idx, bag in enumerate(td.bags):
        for v in bag:
            if v not in holders:
                raise WidthError(f"bag {idx} holds unknown vertex {v}")
            holders[v].append(idx)
    for v, idxs in holders.items():
        if not idxs:
            raise WidthError(f"vertex {v} appears in no bag")
        if not nx.is_connected(tree.subgraph(idxs)):
            raise WidthError(f"bags holding vertex {v} are not connected")
    for u, v in sorted(graph.edges):
        if not any(u in td.bags[i] and v in td.bags[i] for i in holders[u]):
            raise WidthError(f"edge ({u},{v}) is not covered by any bag")
    return td.width


def decomposition_from_order(graph: Graph, order: list[int]) -> TreeDecomposition:
    """Tree decomposition induced by eliminating vertices in ``order``."""
    if sorted(order) != list(range(graph.n)):
        raise WidthError("elimination order must list every vertex exactly once")
    position = {v: i for i, v in enumerate(order)}
    neighbors = [set(graph.adj[v]) for v in range(graph.n)]
    bags = []
    edges = []
    last = len(order) - 1
    for idx, v in enumerate(order):
        later = {u for u in neighbors[v] if position[u] > idx}
        bags.append(frozenset(later | {v}))
        for u in later:
            neighbors[u] |= later - {u}
        if later:
            edges.append((idx, min(position[u] for u in later)))
        elif idx != last:
            edges.append((idx, last))
    return TreeDecomposition(bags=tuple(bags), edges=tuple(edges))


def _from_networkx(decomposition: nx.Graph) -> TreeDecomposition:
    nodes = sorted(decomposition.nodes, key=lambda bag: sorted(bag))
    index = {bag: i for i, bag in enumerate(nodes)}
    edges = tuple(sorted((min(index[a], index[b]), max(index[a], index[b])) for a, b in decomposition.edges))
    return TreeDecomposition(bags=tuple(frozenset(bag) for bag in nodes), edges=edges)


def treewidth_upper(graph: Graph) -> tuple[int, TreeDecomposition]:
    """Best of the min-degree and min-fill-in heuristics, with its decomposition."""
    if graph.n == 0:
        return 0, TreeDecomposition(bags=())
    best = None
    for heuristic in (treewidth_min_fill_in, treewidth_min_degree):
        width, decomposition = heuristic(graph.nx_graph)
        if best is None or width < best[0]:
            best = (width, decomposition)
    width, decomposition = best
    return max(0, width), _from_networkx(decomposition)


def minor_min_width(graph: Graph) -> int:
    work = nx.Graph(graph.nx_graph)
    best = 0
    while work.number_of_nodes() > 1:
        v = min(work.nodes, key=lambda u: (work.degree(u), u))
        degree = work.degree(v)
        best = max(best, degree)
        if degree == 0:
            work.remove_node(v)
            continue
        u = min(work.neighbors(v), key=lambda w: (work.degree(w), w))
        work = nx.contracted_nodes(work, u, v, self_loops=False)
    return best


def treewidth_lower(graph: Graph) -> int:
    if graph.n == 0 or not graph.edges:
        return 0
    degeneracy = max(nx.core_number(nx.Graph(graph.nx_graph)).values())
    return max(degeneracy, minor_min_width(graph))


# ---------------------------------------------------------------------------
# Exact treewidth


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _reach(adj: list[int], eliminated: int, v: int) -> int:
    """Vertices outside ``eliminated`` reachable from v through eliminated vertices."""
    seen = 1 << v
    found = 0
    stack = [v]
    while stack:
        u = stack.pop()
        fresh = adj[u] & ~seen
        seen |= fresh
        found |= fresh & ~eliminated
        for w in _bits(fresh & eliminated):
            stack.append(w)
    return found


def _is_clique(adj: list[int], eliminated: int, members: int) -> bool:
    for u in _bits(members):
        rest = members & ~((1 << (u + 1)) - 1)
        if rest & ~_reach(adj, eliminated, u):
            return False
    return True


def _order_within(adj: list[int], n: int, k: int, budget: _Budget) -> Optional[list[int]]:
    """An elimination order of width <= k, or None."""
    failed: set[int] = set()
    full = (1 << n) - 1

    def search(eliminated: int, remaining: int) -> Optional[list[int]]:
        if remaining - 1 <= k:
            return list(_bits(full & ~eliminated))
        if eliminated in failed:
            return None
        budget.tick()
        candidates = []
        for v in _bits(full & ~eliminated):
            reach = _reach(adj, eliminated, v)
            degree = bin(reach).count("1")
            if degree > k:
                continue
            if _is_clique(adj, eliminated, reach):
                candidates = [(degree, v)]
                break
            candidates.append((degree, v))
        for _, v in sorted(candidates):
            rest = search(eliminated | (1 << v), remaining - 1)
            if rest is not None:
                return [v] + rest
        failed.add(eliminated)
        return None

    return search(0, n)


def _component_treewidth(graph: Graph, budget: _Budget) -> tuple[int, int, TreeDecomposition, bool]:
    """(lower, upper, decomposition of width upper, finished) for a connected graph."""
    upper, td = treewidth_upper(graph)
    lower = treewidth_lower(graph)
    adj = [0] * graph.n
    for u, v in graph.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    for k in range(lower, upper):
        try:
            order = _order_within(adj, graph.n, k, budget)
        except _BudgetExceeded:
            return k, upper, td, False
        if order is not None:
            return k, k, decomposition_from_order(graph, order), True
    return upper, upper, td, True


def _join_decompositions(parts: list[tuple[TreeDecomposition, dict[int, int]]]) -> TreeDecomposition:
    """Glue per-component decompositions into one tree by linking each to the first bag."""
    bags: list[frozenset[int]] = []
    edges: list[tuple[int, int]] = []
    for td, back in parts:
        offset = len(bags)
        bags.extend(frozenset(back[v] for v in bag) for bag in td.bags)
        edges.extend((a + offset, b + offset) for a, b in td.edges)
        if offset:
            edges.append((0, offset))
    return TreeDecomposition(bags=tuple(bags), edges=tuple(edges))


def _cache_enabled() -> bool:
    return get_bool_env("LAB_WIDTH_CACHE", False)


def _cached(graph: Graph, kind: str) -> Optional[WidthResult]:
    if not _cache_enabled():
        return None
    from .cache_db import get_cached_width, graph_fingerprint

    data = get_cached_width(graph_fingerprint(graph), kind)
    return WidthResult.from_dict(data) if data else None


def _store(graph: Graph, result: WidthResult) -> None:
    if not (_cache_enabled() and result.exact):
        return
    from .cache_db import graph_fingerprint, put_cached_width

    put_cached_width(graph_fingerprint(graph), result.kind, result.to_dict())


def treewidth_exact(graph: Graph, budget: Optional[int] = None) -> WidthResult:
    """Exact treewidth when the search fits in ``budget`` node expansions, bounds otherwise."""
    cached = _cached(graph, TREEWIDTH)
    if cached is not None:
        return cached
    if graph.n == 0:
        return WidthResult(TREEWIDTH, 0, 0, True, TreeDecomposition(bags=()))
    logger = get_logger()
    started = time.monotonic()
    tracker = _Budget(default_budget() if budget is None else budget)
    lower = upper = 0
    finished = True
    parts = []
    for component in sorted(nx.connected_components(graph.nx_graph), key=min):
        sub, index_map = induced_subgraph(graph, component)
        low, high, td, done = _component_treewidth(sub, tracker)
        lower = max(lower, low)
        upper = max(upper, high)
        finished = finished and done
        parts.append((td, {new: old for old, new in index_map.items()}))
    td = _join_decompositions(parts)
    if finished:
        result = WidthResult(TREEWIDTH, upper, upper, True, td)
    else:
        result = WidthResult(TREEWIDTH, lower, upper, False, td)
        logger.info(
            "BUDGET treewidth n=%s used=%s lower=%s upper=%s",
            graph.n,
            tracker.used,
            lower,
            upper,
        )
    logger.debug(
        "DONE treewidth n=%s width=%s exact=%s elapsed=%.2fs",
        graph.n,
        result.upper,
        result.exact,
        time.monotonic() - started,
    )
    _store(graph, result)
    return result


def product_decomposition(td: TreeDecomposition, k: int) -> TreeDecomposition:
    """Blow every bag B up to B × {1..k}, a decomposition of G ⊠ P_k."""
    if k < 1:
        raise WidthError("path length must be positive")
    bags = tuple(frozenset(u * k + x for u in bag for x in range(k)) for bag in td.bags)
    return TreeDecomposition(bags=bags, edges=td.edges)


def product_tw_bound(tw: int, k: int) -> int:
    return k * (tw + 1) - 1


def check_product_tw_bound(graph: Graph, k: int, budget: Optional[int] = None) -> dict:
    """tw(G ⊠ P_k) <= k (tw(G) + 1) - 1, checked by exact search and a blown-up decomposition."""
    base = treewidth_exact(graph, budget)
    product = strong_product(graph, make_path(k))
    bound = product_tw_bound(base.upper, k)
    blown = product_decomposition(base.certificate, k)
    certified = verify_tree_decomposition(product, blown) if graph.n else 0
    realized = treewidth_exact(product, budget)
    details = {
        "k": k,
        "bound": bound,
        "base": base.to_dict(),
        "product": {"lower": realized.lower, "upper": realized.upper, "exact": realized.exact},
        "certified_width": certified,
    }
    if realized.lower > bound:
        return make_report(
            FAIL, witness={"product_lower": realized.lower}, realized_bound=realized.lower, **details
        )
    status = PASS if base.exact and realized.upper <= bound else BOUND_ONLY
    return make_report(status, realized_bound=realized.upper, **details)


# ---------------------------------------------------------------------------
# Cliquewidth


def _twin_classes(nbr: list[int], full: int, members: int) -> list[int]:
    """Classes of ``members`` with equal neighbourhoods outside ``members``, ordered by lowest vertex."""
    outside = full & ~members
    classes: dict[int, int] = {}
    for v in _bits(members):
        key = nbr[v] & outside
        classes[key] = classes.get(key, 0) | (1 << v)
    return sorted(classes.values(), key=lambda c: c & -c)


@dataclass
class _Union:
    left: int
    right: int
    labels: list[int]
    joins: list[tuple[int, int]]


class _CliquewidthSearch:
    def __init__(self, graph: Graph, budget: _Budget) -> None:
        self.n = graph.n
        self.full = (1 << graph.n) - 1
        self.nbr = [0] * graph.n
        for u, v in graph.edges:
            self.nbr[u] |= 1 << v
            self.nbr[v] |= 1 << u
        self.budget = budget
        self.classes: dict[int, list[int]] = {}
        self.best: dict[int, tuple[int, Optional[_Union]]] = {}

    def twin_classes(self, members: int) -> list[int]:
        if members not in self.classes:
            self.classes[members] = _twin_classes(self.nbr, self.full, members)
        return self.classes[members]

    def _complete(self, a: int, b: int) -> bool:
        for u in _bits(a):
            if (b & ~(1 << u)) & ~self.nbr[u]:
                return False
        return True

    def _joins(self, labels: list[int], sides: list[tuple[int, int]]) -> Optional[list[tuple[int, int]]]:
        """Label pairs that must be joined, or None when some join would add a non-edge."""
        joins = []
        for i, j in combinations(range(len(labels)), 2):
            left_i, right_i = sides[i]
            left_j, right_j = sides[j]
            crossing = any(self.nbr[u] & right_j for u in _bits(left_i)) or any(
                self.nbr[u] & left_j for u in _bits(right_i)
            )
            if not crossing:
                continue
            if not self._complete(labels[i], labels[j]):
                return None
            joins.append((i, j))
        return joins

    def _matchings(
        self, a_classes: list[int], b_classes: list[int], groups: list[int]
    ) -> Iterator[list[tuple[int, int]]]:
        group_of = {}
        for g, members in enumerate(groups):
            for c in a_classes + b_classes:
                if c & members:
                    group_of.setdefault(c, g)
        options = []
        for ai, a in enumerate(a_classes):
            partners = [
                bi for bi, b in enumerate(b_classes)
                if group_of[a] == group_of[b] and not any(self.nbr[u] & b for u in _bits(a))
            ]
            options.append(partners)

        def extend(ai: int, used: int, chosen: list[tuple[int, int]]) -> Iterator[list[tuple[int, int]]]:
            if ai == len(a_classes):
                yield list(chosen)
                return
            for bi in options[ai]:
                if not used >> bi & 1:
                    chosen.append((ai, bi))
                    yield from extend(ai + 1, used | (1 << bi), chosen)
                    chosen.pop()
            yield from extend(ai + 1, used, chosen)

        return extend(0, 0, [])

    def union(self, left: int, right: int) -> Optional[_Union]:
        """Fewest-label union of the two twin-class labelings."""
        a_classes = self.twin_classes(left)
        b_classes = self.twin_classes(right)
        groups = self.twin_classes(left | right)
        best: Optional[_Union] = None
        for matching in self._matchings(a_classes, b_classes, groups):
            if best is not None and len(a_classes) + len(b_classes) - len(matching) >= len(best.labels):
                continue
            matched_a = {ai: bi for ai, bi in matching}
            matched_b = set(matched_a.values())
            labels: list[int] = []
            sides: list[tuple[int, int]] = []
            for ai, a in enumerate(a_classes):
                b = b_classes[matched_a[ai]] if ai in matched_a else 0
                labels.append(a | b)
                sides.append((a, b))
            for bi, b in enumerate(b_classes):
                if bi not in matched_b:
                    labels.append(b)
                    sides.append((0, b))
            joins = self._joins(labels, sides)
            if joins is None:
                continue
            best = _Union(left=left, right=right, labels=labels, joins=joins)
        return best

    def solve(self, members: int, limit: int) -> int:
        """Fewest labels for ``members``; values above ``limit`` are reported as limit + 1."""
        if members & (members - 1) == 0:
            return 1
        known = self.best.get(members)
        if known is not None and (known[1] is not None or known[0] > limit):
            return known[0]
        self.budget.tick()
        low = members & -members
        rest = members & ~low
        best_width = limit + 1
        best_union = None
        sub = rest
        while True:
            left = low | sub
            right = members & ~left
            if right:
                width = self._split(left, right, best_width - 1)
                if width is not None and width < best_width:
                    best_width = width
                    best_union = (left, right)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        if best_union is None:
            self.best[members] = (limit + 1, None)
            return limit + 1
        union = self.union(*best_union)
        self.best[members] = (best_width, union)
        return best_width

    def _split(self, left: int, right: int, limit: int) -> Optional[int]:
        if limit < 1:
            return None
        if len(self.twin_classes(left)) > limit or len(self.twin_classes(right)) > limit:
            return None
        union = self.union(left, right)
        if union is None or len(union.labels) > limit:
            return None
        width = len(union.labels)
        for part in (left, right):
            width = max(width, self.solve(part, limit))
            if width > limit:
                return None
        return width

    def expression(self, members: int, targets: dict[int, int], k: int) -> dict:
        """Expression building G[members] whose twin classes carry the labels in ``targets``."""
        if members & (members - 1) == 0:
            v = members.bit_length() - 1
            return {"op": "vertex", "v": v, "label": targets[members]}
        _, union = self.best[members]
        groups = self.twin_classes(members)
        assigned: list[Optional[int]] = [None] * len(union.labels)
        carriers = {}
        for idx, label in enumerate(union.labels):
            group = next(g for g in groups if g & label)
            if group not in carriers:
                carriers[group] = idx
                assigned[idx] = targets[group]
        spare = iter(sorted(set(range(k)) - set(targets.values())))
        for idx in range(len(assigned)):
            if assigned[idx] is None:
                assigned[idx] = next(spare)
        left_targets = {}
        right_targets = {}
        for idx, label in enumerate(union.labels):
            for c in self.twin_classes(union.left):
                if c & label:
                    left_targets[c] = assigned[idx]
            for c in self.twin_classes(union.right):
                if c & label:
                    right_targets[c] = assigned[idx]
        expr: dict = {
            "op": "union",
            "left": self.expression(union.left, left_targets, k),
            "right": self.expression(union.right, right_targets, k),
        }
        for i, j in union.joins:
            expr = {"op": "join", "a": assigned[i], "b": assigned[j], "arg": expr}
        for idx, label in enumerate(union.labels):
            group = next(g for g in groups if g & label)
            if carriers[group] != idx:
                expr = {"op": "relabel", "from": assigned[idx], "to": targets[group], "arg": expr}
        return expr


def evaluate_expression(expr: dict) -> tuple[dict[int, int], set[tuple[int, int]], int]:
    """(label per vertex, edge set, labels used at once) for a label expression."""
    op = expr.get("op")
    if op == "vertex":
        return {expr["v"]: expr["label"]}, set(), 1
    if op == "union":
        left_labels, left_edges, left_used = evaluate_expression(expr["left"])
        right_labels, right_edges, right_used = evaluate_expression(expr["right"])
        if set(left_labels) & set(right_labels):
            raise WidthError("union of expressions sharing a vertex")
        labels = {**left_labels, **right_labels}
        used = max(left_used, right_used, len(set(labels.values())))
        return labels, left_edges | right_edges, used
    if op == "join":
        labels, edges, used = evaluate_expression(expr["arg"])
        if expr["a"] == expr["b"]:
            raise WidthError("join needs two distinct labels")
        side_a = [v for v, lab in labels.items() if lab == expr["a"]]
        side_b = [v for v, lab in labels.items() if lab == expr["b"]]
        edges |= {(min(u, v), max(u, v)) for u in side_a for v in side_b}
        return labels, edges, used
    if op == "relabel":
        labels, edges, used = evaluate_expression(expr["arg"])
        relabeled = {v: expr["to"] if lab == expr["from"] else lab for v, lab in labels.items()}
        return relabeled, edges, used
    raise WidthError(f"unknown expression node {op!r}")


def _label_values(expr: dict) -> Iterator[int]:
    op = expr.get("op")
    if op == "vertex":
        yield expr["label"]
    elif op == "union":
        yield from _label_values(expr["left"])
        yield from _label_values(expr["right"])
    else:
        yield from (expr["a"], expr["b"]) if op == "join" else (expr["from"], expr["to"])
        yield from _label_values(expr["arg"])


def verify_expression(graph: Graph, expr: Optional[dict], k: int) -> bool:
    """Check that ``expr`` uses labels in range(k) and rebuilds ``graph`` exactly."""
    if graph.n == 0:
        return expr is None
    if expr is None:
        raise WidthError("missing expression")
    if any(not 0 <= label < k for label in _label_values(expr)):
        raise WidthError(f"expression uses a label outside range({k})")
    labels, edges, _ = evaluate_expression(expr)
    if set(labels) != set(range(graph.n)):
        raise WidthError("expression does not build every vertex exactly once")
    if edges != set(graph.edges):
        diff = sorted(edges ^ set(graph.edges))
        raise WidthError(f"expression edge set differs from the graph at {diff[0]}")
    return True


def cliquewidth_lower(graph: Graph) -> int:
    if graph.n == 0:
        return 0
    return 2 if graph.edges else 1


def cliquewidth_upper(graph: Graph, tw: Optional[int] = None) -> int:
    """min(n, 3 * 2^(tw-1)) from a treewidth bound."""
    if graph.n == 0:
        return 0
    if not graph.edges:
        return 1
    if tw is None:
        tw, _ = treewidth_upper(graph)
    return max(cliquewidth_lower(graph), min(graph.n, 3 * 2 ** (tw - 1)))


def cliquewidth_exact_tiny(
    graph: Graph,
    max_labels: Optional[int] = None,
    budget: Optional[int] = None,
) -> WidthResult:
    """Cliquewidth with a rebuilding certificate.

    Any k-expression can be rewritten so that each subexpression labels its
    vertices by their neighbourhoods outside it, and the search runs over
    exactly those expressions, so a completed search returns the exact value
    with ``exact=True``. Graphs above ``CLIQUEWIDTH_EXACT_LIMIT`` vertices are
    not searched. A search that runs out of ``budget`` or needs more than
    ``max_labels`` labels returns lower and upper bounds with ``exact=False``.
    """
    cached = _cached(graph, CLIQUEWIDTH)
    if cached is not None:
        return cached
    lower = cliquewidth_lower(graph)
    upper = cliquewidth_upper(graph)
    if graph.n == 0:
        return WidthResult(CLIQUEWIDTH, 0, 0, True, None)
    if graph.n == 1:
        return WidthResult(CLIQUEWIDTH, 1, 1, True, {"op": "vertex", "v": 0, "label": 0})
    if graph.n > CLIQUEWIDTH_EXACT_LIMIT:
        return WidthResult(CLIQUEWIDTH, lower, upper, False, None)
    limit = graph.n if max_labels is None else max_labels
    search = _CliquewidthSearch(graph, _Budget(default_budget() if budget is None else budget))
    full = search.full
    try:
        width = search.solve(full, limit)
    except _BudgetExceeded:
        get_logger().info("BUDGET cliquewidth n=%s used=%s", graph.n, search.budget.used)
        return WidthResult(CLIQUEWIDTH, lower, upper, False, None)
    if width > limit:
        return WidthResult(CLIQUEWIDTH, max(lower, min(limit + 1, upper)), upper, False, None)
    expr = search.expression(full, {full: 0}, width)
    verify_expression(graph, expr, width)
    result = WidthResult(CLIQUEWIDTH, width, width, True, expr)
    _store(graph, result)
    return result


# ---------------------------------------------------------------------------
# Sparse graphs


def find_kss(graph: Graph, s: int) -> Optional[tuple[list[int], list[int]]]:
    """A K_{s,s} subgraph as (A, B), or None."""
    if s < 1:
        raise WidthError("s must be positive")
    candidates = [v for v in range(graph.n) if graph.degree(v) >= s]

    def grow(chosen: list[int], common: frozenset[int], start: int):
        if len(chosen) == s:
            return chosen, sorted(common)[:s]
        for idx in range(start, len(candidates)):
            v = candidates[idx]
            narrowed = common & graph.adj[v] if chosen else graph.adj[v]
            if len(narrowed) >= s:
                found = grow(chosen + [v], narrowed, idx + 1)
                if found:
                    return found
        return None

    return grow([], frozenset(), 0)


def contains_kss(graph: Graph, s: int) -> bool:
    return find_kss(graph, s) is not None


def ks_free(graph: Graph, s: int) -> bool:
    return not contains_kss(graph, s)


def check_sparse_cw_tw(graph: Graph, c: int, s: int, budget: Optional[int] = None) -> dict:
    """Evidence record pairing cliquewidth and treewidth on a K_{s,s}-free graph."""
    witness = find_kss(graph, s)
    tw = treewidth_exact(graph, budget)
    if graph.n <= CLIQUEWIDTH_EXACT_LIMIT:
        cw = cliquewidth_exact_tiny(graph, budget=budget)
    else:
        cw = WidthResult(CLIQUEWIDTH, cliquewidth_lower(graph), cliquewidth_upper(graph, tw.upper), False)
    return make_report(
        PASS,
        realized_bound=tw.upper,
        in_family=witness is None and cw.upper <= c,
        kss_witness=None if witness is None else {"A": witness[0], "B": witness[1]},
        cliquewidth={"lower": cw.lower, "upper": cw.upper, "exact": cw.exact},
        treewidth={"lower": tw.lower, "upper": tw.upper, "exact": tw.exact},
        c=c,
        s=s,
    )
