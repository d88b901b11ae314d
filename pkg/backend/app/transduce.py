from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence, Union

from .flips import FlipStructure, PreconditionError, apply_flip, coverage_radius
from .graphs import (
    INF,
    ColoredGraph,
    CubeCoord,
    Graph,
    GraphError,
    as_colored,
    graph_metrics,
    induced_subgraph,
)
from .logic import (
    Formula,
    InterpretationError,
    as_formula,
    colors_used,
    format_formula,
    interpret,
)
from .reports import FAIL, PASS, make_report


class TransductionError(ValueError):
    pass


class RangeViolation(RuntimeError):
    def __init__(self, declared: int, realized: float, witness: tuple[int, int]) -> None:
        super().__init__(
            f"edge {witness} spans distance {realized} > declared range {declared}"
        )
        self.declared = declared
        self.realized = realized
        self.witness = witness


@dataclass(frozen=True)
class Transduction:
    color_names: tuple[str, ...]
    psi: Formula
    declared_range: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "color_names", tuple(self.color_names))
        object.__setattr__(self, "psi", as_formula(self.psi))
        if len(set(self.color_names)) != len(self.color_names):
            raise TransductionError("duplicate color names")
        if self.declared_range is not None and self.declared_range < 0:
            raise TransductionError("declared range must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "colors": list(self.color_names),
            "psi": format_formula(self.psi),
            "range": self.declared_range,
        }


@dataclass(frozen=True)
class TransductionRun:
    coloring: Mapping[str, frozenset[int]] = field(default_factory=dict)
    keep: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coloring", {name: frozenset(vs) for name, vs in self.coloring.items()}
        )
        object.__setattr__(self, "keep", frozenset(self.keep))

    def to_dict(self) -> dict:
        return {
            "coloring": {name: sorted(vs) for name, vs in sorted(self.coloring.items())},
            "keep": sorted(self.keep),
        }


def full_run(graph: Union[Graph, ColoredGraph], coloring: Optional[Mapping] = None) -> TransductionRun:
    return TransductionRun(coloring=coloring or {}, keep=frozenset(range(graph.n)))


def identity_transduction() -> Transduction:
    return Transduction(color_names=(), psi=as_formula("E(x,y)"), declared_range=1)


def validate_run(T: Transduction, graph: ColoredGraph, run: TransductionRun) -> None:
    unknown = set(run.coloring) - set(T.color_names)
    if unknown:
        raise TransductionError(f"run uses undeclared colors: {sorted(unknown)}")
    clash = set(T.color_names) & set(graph.colors)
    if clash:
        raise TransductionError(f"colors already present on input: {sorted(clash)}")
    for name, members in run.coloring.items():
        bad = [v for v in members if not 0 <= v < graph.n]
        if bad:
            raise TransductionError(f"color {name} marks invalid vertices {sorted(bad)[:5]}")
    bad_keep = [v for v in run.keep if not 0 <= v < graph.n]
    if bad_keep:
        raise TransductionError(f"keep set has invalid vertices {sorted(bad_keep)[:5]}")
    missing = colors_used(T.psi) - set(T.color_names) - set(graph.colors)
    if missing:
        raise TransductionError(f"psi references unknown colors: {sorted(missing)}")


def edge_range(graph: Graph, output: Graph) -> tuple[float, Optional[tuple[int, int]]]:
    worst = 0
    witness = None
    for u, v in sorted(output.edges):
        dist = graph.distance(u, v)
        if dist > worst:
            worst = dist
            witness = (u, v)
    return worst, witness


def apply_transduction(
    T: Transduction,
    graph: Union[Graph, ColoredGraph],
    run: TransductionRun,
) -> Graph:
    """psi(G+)[keep], where G+ is G marked with the run's coloring."""
    graph = as_colored(graph)
    validate_run(T, graph, run)
    marked = graph.with_colors({name: run.coloring.get(name, frozenset()) for name in T.color_names})
    try:
        interpreted = interpret(marked, T.psi)
    except InterpretationError as exc:
        raise TransductionError(str(exc)) from exc
    if T.declared_range is not None:
        realized, witness = edge_range(graph.base, interpreted)
        if realized > T.declared_range:
            raise RangeViolation(T.declared_range, realized, witness)
    output, _ = induced_subgraph(interpreted, run.keep)
    return output


def count_runs(T: Transduction, graph: Union[Graph, ColoredGraph], keep_fixed: bool) -> int:
    n = graph.n
    total = 2 ** (len(T.color_names) * n)
    if not keep_fixed:
        total *= 2 ** n
    return total


def _decode_run(
    T: Transduction, n: int, bits: int, keep: Optional[frozenset[int]]
) -> TransductionRun:
    coloring = {}
    for ci, name in enumerate(T.color_names):
        coloring[name] = frozenset(v for v in range(n) if bits >> (ci * n + v) & 1)
    if keep is None:
        offset = len(T.color_names) * n
        keep = frozenset(v for v in range(n) if bits >> (offset + v) & 1)
    return TransductionRun(coloring=coloring, keep=keep)


def enumerate_runs(
    T: Transduction,
    graph: Union[Graph, ColoredGraph],
    budget: int,
    seed: int,
    keep: Optional[frozenset[int]] = None,
) -> Iterator[TransductionRun]:
    """Exhaustive when every run fits in the budget, otherwise ``budget`` seeded samples.

    Passing ``keep`` fixes the induced-subgraph step; otherwise it is enumerated too.
    """
    if budget < 1:
        raise TransductionError("budget must be at least 1")
    n = graph.n
    keep = frozenset(keep) if keep is not None else None
    width = len(T.color_names) * n + (0 if keep is not None else n)
    total = 2 ** width
    if total <= budget:
        for bits in range(total):
            yield _decode_run(T, n, bits, keep)
        return
    rng = random.Random(seed)
    for _ in range(budget):
        yield _decode_run(T, n, rng.getrandbits(width) if width else 0, keep)


@dataclass(frozen=True)
class DiameterGuard:
    """Stage precondition diam(G) <= bound; a failing stage keeps the input edges instead."""

    bound: int

    def holds(self, graph: Union[Graph, ColoredGraph]) -> bool:
        return graph_metrics(as_colored(graph).base).diameter <= self.bound


def _fallback(stage: Transduction) -> Transduction:
    return Transduction(color_names=stage.color_names, psi=as_formula("E(x,y)"), declared_range=1)


@dataclass(frozen=True)
class Pipeline:
    """Semantic composition: stages run left to right, each behind an optional guard."""

    stages: tuple[Transduction, ...]
    guards: tuple[Optional[DiameterGuard], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        guards = tuple(self.guards)
        if len(guards) > len(self.stages):
            raise TransductionError(f"{len(guards)} guards for {len(self.stages)} stages")
        object.__setattr__(self, "guards", guards + (None,) * (len(self.stages) - len(guards)))

    @property
    def declared_range(self) -> Optional[int]:
        result = 1
        for stage in self.stages:
            if stage.declared_range is None:
                return None
            result *= stage.declared_range
        return result

    def apply_guarded(
        self, graph: Union[Graph, ColoredGraph], runs: Sequence[TransductionRun]
    ) -> tuple[Graph, tuple[int, ...], tuple[int, ...]]:
        """Output graph, the source vertex of each output vertex, and the stages whose guard failed."""
        if len(runs) != len(self.stages):
            raise TransductionError(f"expected {len(self.stages)} runs, got {len(runs)}")
        current: Union[Graph, ColoredGraph] = graph
        origin = tuple(range(graph.n))
        skipped = []
        for index, (stage, guard, run) in enumerate(zip(self.stages, self.guards, runs)):
            if guard is not None and not guard.holds(current):
                stage = _fallback(stage)
                skipped.append(index)
            output = apply_transduction(stage, current, run)
            origin = tuple(origin[v] for v in sorted(run.keep))
            current = output
        return as_colored(current).base, origin, tuple(skipped)

    def apply_traced(
        self, graph: Union[Graph, ColoredGraph], runs: Sequence[TransductionRun]
    ) -> tuple[Graph, tuple[int, ...]]:
        """Output graph plus, for each output vertex, its original source vertex."""
        output, origin, _ = self.apply_guarded(graph, runs)
        return output, origin

    def apply(self, graph: Union[Graph, ColoredGraph], runs: Sequence[TransductionRun]) -> Graph:
        return self.apply_traced(graph, runs)[0]

    def realized_range(
        self, graph: Union[Graph, ColoredGraph], runs: Sequence[TransductionRun]
    ) -> float:
        source = as_colored(graph).base
        output, origin = self.apply_traced(graph, runs)
        worst = 0
        for u, v in output.edges:
            worst = max(worst, source.distance(origin[u], origin[v]))
        return worst


def compose(S: Union[Transduction, Pipeline], T: Union[Transduction, Pipeline]) -> Pipeline:
    """Apply S, then T."""
    first = S if isinstance(S, Pipeline) else Pipeline(stages=(S,))
    second = T if isinstance(T, Pipeline) else Pipeline(stages=(T,))
    return Pipeline(stages=first.stages + second.stages, guards=first.guards + second.guards)


MOD3_COLORS = tuple(f"{axis}{a}" for axis in "XYZ" for a in range(3))


def color_cube_mod3(cube: Graph) -> ColoredGraph:
    """Mark (i,j,k) with X_{i mod 3}, Y_{j mod 3}, Z_{k mod 3}."""
    if not cube.labels or not all(isinstance(label, CubeCoord) for label in cube.labels):
        raise TransductionError("input carries no cube coordinate table")
    colors: dict[str, set[int]] = {name: set() for name in MOD3_COLORS}
    for v, coord in enumerate(cube.labels):
        colors[f"X{coord.i % 3}"].add(v)
        colors[f"Y{coord.j % 3}"].add(v)
        colors[f"Z{coord.k % 3}"].add(v)
    try:
        return ColoredGraph(cube, colors)
    except GraphError as exc:
        raise TransductionError(str(exc)) from exc


def succ_text(axis: str, a: str, b: str) -> str:
    """b is the neighbour of a one step up along ``axis`` (residue goes up by one mod 3)."""
    pairs = " | ".join(f"({axis}{r}({a}) & {axis}{(r + 1) % 3}({b}))" for r in range(3))
    return f"(E({a},{b}) & ({pairs}))"


def beta_diag_text(a: str, b: str) -> str:
    """Disjunction of the four non-decreasing diagonal steps from a to b."""
    patterns = [
        f"(exists z. {succ_text('X', a, 'z')} & {succ_text('Y', 'z', b)})",
        f"(exists z. {succ_text('X', a, 'z')} & {succ_text('Z', 'z', b)})",
        f"(exists z. {succ_text('Y', a, 'z')} & {succ_text('Z', 'z', b)})",
        (
            f"(exists z. {succ_text('X', a, 'z')} & "
            f"(exists w. {succ_text('Y', 'z', 'w')} & {succ_text('Z', 'w', b)}))"
        ),
    ]
    return "(" + " | ".join(patterns) + ")"


def diag_transduction() -> Transduction:
    text = f"E(x,y) | {beta_diag_text('x', 'y')} | {beta_diag_text('y', 'x')}"
    return Transduction(color_names=MOD3_COLORS, psi=as_formula(text), declared_range=3)


def diag_run(cube: Graph) -> TransductionRun:
    colored = color_cube_mod3(cube)
    return TransductionRun(coloring=colored.colors, keep=frozenset(range(cube.n)))


def apply_diag(cube: Graph) -> Graph:
    return apply_transduction(diag_transduction(), cube, diag_run(cube))


def part_color(part: int) -> str:
    return f"P{part}"


def flip_psi_text(pattern: Graph) -> str:
    """Complement E(x,y) exactly on the part pairs joined in ``pattern`` (vertex i-1 is part i)."""
    terms = []
    for a, b in sorted(pattern.edges):
        terms.append(f"({part_color(a + 1)}(x) & {part_color(b + 1)}(y))")
        terms.append(f"({part_color(b + 1)}(x) & {part_color(a + 1)}(y))")
    for a in sorted(pattern.loops):
        terms.append(f"({part_color(a + 1)}(x) & {part_color(a + 1)}(y))")
    flipped = "(" + " | ".join(terms) + ")" if terms else "false"
    return f"!(x = y) & ((E(x,y) & !{flipped}) | (!E(x,y) & {flipped}))"


def flip_reconstruction(fs: FlipStructure, alpha: int) -> Pipeline:
    """One-stage pipeline producing F(G, P, H) from G marked with its parts.

    H is fixed into psi rather than encoded as a color. The stage runs only
    when diam(G) <= 2kα + 4k, which is also its declared range; otherwise it
    keeps the edges of G.
    """
    if alpha < 0:
        raise TransductionError(f"alpha must be nonnegative, got {alpha}")
    bound = 2 * fs.k * alpha + 4 * fs.k
    stage = Transduction(
        color_names=tuple(part_color(i) for i in range(1, fs.k + 1)),
        psi=as_formula(flip_psi_text(fs.pattern)),
        declared_range=bound,
    )
    return Pipeline(stages=(stage,), guards=(DiameterGuard(bound),))


def flip_run(fs: FlipStructure) -> TransductionRun:
    parts = fs.parts()
    return TransductionRun(
        coloring={part_color(i): members for i, members in parts.items()},
        keep=frozenset(range(fs.graph.n)),
    )


def reconstruct_flip(fs: FlipStructure, alpha: int) -> tuple[Graph, bool]:
    """F(G, P, H) through the guarded pipeline, and whether the guard let the flip run."""
    output, _, skipped = flip_reconstruction(fs, alpha).apply_guarded(fs.graph, [flip_run(fs)])
    return output, not skipped


def check_flip_reconstruction(fs: FlipStructure, alpha: Optional[int] = None) -> dict:
    """The guarded flip transduction reproduces F(G, P, H).

    Requires every vertex within ``alpha`` of an affected part; ``alpha``
    defaults to the coverage radius of the structure.
    """
    coverage = coverage_radius(fs)
    if coverage == INF:
        raise PreconditionError("no affected part reaches every vertex", coverage)
    alpha = int(coverage) if alpha is None else alpha
    if coverage > alpha:
        raise PreconditionError(
            f"some vertex is {coverage} away from every affected part (alpha={alpha})", coverage
        )
    bound = 2 * fs.k * alpha + 4 * fs.k
    output, ran = reconstruct_flip(fs, alpha)
    if not ran:
        diameter = graph_metrics(fs.graph).diameter
        return make_report(
            FAIL, witness={"diameter": diameter}, realized_bound=diameter, bound=bound, alpha=alpha
        )
    diff = sorted(output.edges ^ apply_flip(fs).edges)
    realized, _ = edge_range(fs.graph, output)
    return make_report(
        FAIL if diff else PASS,
        witness=list(diff[0]) if diff else None,
        realized_bound=realized,
        bound=bound,
        alpha=alpha,
    )
