"""Command-line harness: ``slicelab [--seed S] [--budget B] [--jobs J] [--out PATH] <command> ...``.

Exit codes: 0 pass (or bound-only), 1 checked failure, 2 usage or input error.
"""
import argparse
import random
import sys
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from . import experiments
from .flips import (
    PreconditionError,
    check_component_diameter,
    check_connected,
    check_diameter_bound,
    check_small_dist,
    extract_avoiding_subcube,
    find_cube_in_ball,
    flipped_cube_instance,
)
from .graphs import (
    ColoredGraph,
    Graph,
    GraphError,
    as_colored,
    graph_by_name,
    make_cube,
    make_cycle,
    make_diag_cube,
    make_path,
    strong_product,
)
from .logs import get_logger
from .reports import FAIL, PASS, make_report
from .schemas import (
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
    load_json_file,
)
from .settings import default_budget, default_jobs, default_seed, load_env
from .slices import (
    SliceDecomposition,
    build_slice_decomposition,
    check_locality_window,
    cube_axis_embedding,
    cube_corner_embedding,
    extended_window,
    identity_embedding,
    verify_condition_i,
    verify_condition_ii,
    window,
)
from .transduce import (
    RangeViolation,
    apply_diag,
    apply_transduction,
    check_flip_reconstruction,
    edge_range,
)
from .width import check_product_tw_bound, cliquewidth_exact_tiny, treewidth_exact

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

GENERATE_KINDS = ("cube", "diagcube", "product", "flipped-cube", "path", "cycle", "embedding")
LEMMAS = (
    "induced-subgrid",
    "avoid-subcube",
    "small-dist",
    "connected",
    "component-diameter",
    "diameter-bound",
    "locality-window",
    "condition-i",
    "condition-ii",
    "tw-product",
    "flip-reconstruction",
)
EXPERIMENTS = (
    "diag-pipeline",
    "slice-split",
    "bipartition-sample",
    "flip-lemmas",
    "subcube-extraction",
    "product-slices",
)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slicelab", description="Graph transduction and slice decomposition lab.")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--budget", type=int, default=None, help="search nodes per exact width computation")
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--out", type=Path, default=None, help="output file (stdout when omitted)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    generate = commands.add_parser("generate")
    generate.add_argument("kind", choices=GENERATE_KINDS)
    generate.add_argument("--N", type=int, default=3)
    generate.add_argument("--n", type=int, default=5, help="path or cycle length")
    generate.add_argument("--k", type=int, default=2)
    generate.add_argument("--H", default="P3", help="named factor graph for product and embedding")
    generate.add_argument("--p", type=int, default=4)
    generate.add_argument("--layering", choices=("product", "axis", "corner"), default="product")

    verify = commands.add_parser("verify")
    verify.add_argument("lemma", choices=LEMMAS)
    verify.add_argument("--structure", type=Path, help="flip structure JSON")
    verify.add_argument("--graph", type=Path, help="graph JSON")
    verify.add_argument("--name", help="named graph such as P5, C4, K3")
    verify.add_argument("--source", type=Path, help="graph the embedding witnesses (defaults to --graph)")
    verify.add_argument("--embedding", type=Path)
    verify.add_argument("--slices", type=Path)
    verify.add_argument("--rho", default="E(x,y)")
    verify.add_argument("--v", type=int, default=0)
    verify.add_argument("--r", type=int, default=0)
    verify.add_argument("--i", type=int, default=1)
    verify.add_argument("--j", type=int, default=None)
    verify.add_argument("--k", type=int, default=1)
    verify.add_argument("--d", type=int, default=1)
    verify.add_argument("--alpha", type=int, default=None)
    verify.add_argument("--part", type=int, default=1)

    experiment = commands.add_parser("experiment")
    experiment.add_argument("name", choices=EXPERIMENTS)
    experiment.add_argument("--N", type=int, default=2)
    experiment.add_argument("--sizes", type=int, nargs="+", default=None)
    experiment.add_argument("--parts", type=int, nargs="+", default=[2, 3])
    experiment.add_argument("--instances", type=int, default=100)
    experiment.add_argument("--samples", type=int, default=10_000)
    experiment.add_argument("--d", type=int, default=None)
    experiment.add_argument("--r", type=int, default=2)
    experiment.add_argument("--k", type=int, default=1)
    experiment.add_argument("--p", type=int, default=6)
    experiment.add_argument("--layering", choices=experiments.LAYERINGS, default="axis")
    experiment.add_argument("--families", nargs="+", default=["P3", "P4", "C4"])
    experiment.add_argument("--rho", default=experiments.DEFAULT_RHO)

    width = commands.add_parser("width")
    width.add_argument("--graph", type=Path)
    width.add_argument("--name")
    width.add_argument("--kind", choices=("treewidth", "cliquewidth", "both"), default="both")
    width.add_argument("--max-labels", type=int, default=None)

    transduce = commands.add_parser("transduce")
    transduce.add_argument("--graph", type=Path)
    transduce.add_argument("--N", type=int, default=None, help="use the cube Q_N as input")
    mode = transduce.add_mutually_exclusive_group(required=True)
    mode.add_argument("--diag", action="store_true", help="apply the diagonal transduction")
    mode.add_argument("--transduction", type=Path)
    transduce.add_argument("--run", type=Path, help="coloring and keep set JSON")
    return parser


def _config(args: argparse.Namespace, name: Optional[str] = None, **params: Any) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        name=name,
        seed=args.seed,
        budget=args.budget,
        jobs=args.jobs,
        params={key: value for key, value in params.items() if value is not None},
    )


def _write(args: argparse.Namespace, lines: Iterable[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text)


def _emit(args: argparse.Namespace, config: ExperimentConfig, records: Sequence[dict]) -> int:
    _write(args, (dumps({**record, "config": config}) for record in records))
    statuses = {record.get("status") for record in records}
    if "error" in statuses:
        return EXIT_USAGE
    return EXIT_FAIL if FAIL in statuses else EXIT_PASS


def _load_graph(args: argparse.Namespace, path_attr: str = "graph") -> ColoredGraph:
    """Graph JSON with its colors, or a named uncolored graph."""
    path = getattr(args, path_attr, None)
    name = getattr(args, "name", None)
    if path is not None:
        return build(load_json_file(path, GraphPayload), "to_colored")
    if name:
        return as_colored(graph_by_name(name))
    raise UsageError(f"--{path_attr} or --name is required")


def _load_structure(args: argparse.Namespace):
    if args.structure is None:
        raise UsageError("--structure is required for this lemma")
    return build(load_json_file(args.structure, FlipStructurePayload), "to_structure")


def _load_decomposition(args: argparse.Namespace, graph: Graph) -> SliceDecomposition:
    if args.slices is not None:
        return build(load_json_file(args.slices, SliceDecompositionPayload), "to_decomposition")
    if args.embedding is None:
        raise UsageError("--slices or --embedding is required")
    emb = build(load_json_file(args.embedding, EmbeddingPayload), "to_embedding")
    source = _load_graph(args, "source").base if args.source is not None else graph
    return build_slice_decomposition(source, emb, args.d, args.r)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args: argparse.Namespace) -> int:
    kind = args.kind
    config = _config(args, kind, N=args.N, n=args.n, k=args.k, H=args.H, p=args.p, layering=args.layering)
    extra: dict[str, Any] = {}
    if kind == "cube":
        document = GraphPayload.from_graph(make_cube(args.N))
    elif kind == "diagcube":
        document = GraphPayload.from_graph(make_diag_cube(args.N))
    elif kind == "path":
        document = GraphPayload.from_graph(make_path(args.n))
    elif kind == "cycle":
        document = GraphPayload.from_graph(make_cycle(args.n))
    elif kind == "product":
        document = GraphPayload.from_graph(strong_product(graph_by_name(args.H), make_path(args.p)))
    elif kind == "flipped-cube":
        fs = flipped_cube_instance(args.N, args.k, args.seed)
        document = FlipStructurePayload.from_structure(fs)
    else:
        if args.layering == "product":
            graph, emb = identity_embedding(graph_by_name(args.H), args.p)
        elif args.layering == "axis":
            graph, emb = make_diag_cube(args.N), cube_axis_embedding(args.N)
        else:
            graph, emb = make_cube(args.N), cube_corner_embedding(args.N)
        document = EmbeddingPayload.from_embedding(emb)
        extra["graph"] = GraphPayload.from_graph(graph)
    _write(args, [dumps({**document.model_dump(by_alias=True), **extra, "config": config})])
    return EXIT_PASS


# ---------------------------------------------------------------------------
# verify


def _verify_report(args: argparse.Namespace) -> dict:
    lemma = args.lemma
    if lemma == "induced-subgrid":
        fs = _load_structure(args)
        found = find_cube_in_ball(fs, args.v, args.r)
        return make_report(PASS, vertices=sorted(found), side=max(1, args.r // 3))
    if lemma == "avoid-subcube":
        fs = _load_structure(args)
        sub = extract_avoiding_subcube(fs, args.part)
        return make_report(PASS, block_size=sub.graph.n, structure=FlipStructurePayload.from_structure(sub))
    if lemma == "small-dist":
        fs = _load_structure(args)
        return check_small_dist(fs, args.i, args.j if args.j is not None else args.i)
    if lemma == "connected":
        return check_connected(_load_structure(args))
    if lemma == "component-diameter":
        return check_component_diameter(_load_structure(args))
    if lemma == "diameter-bound":
        if args.alpha is None:
            raise UsageError("--alpha is required for diameter-bound")
        return check_diameter_bound(_load_structure(args), args.alpha)
    if lemma == "flip-reconstruction":
        return check_flip_reconstruction(_load_structure(args), args.alpha)
    if lemma == "tw-product":
        return check_product_tw_bound(_load_graph(args).base, args.k, args.budget)
    colored = _load_graph(args)
    graph = colored.base
    sd = _load_decomposition(args, graph)
    if lemma == "condition-i":
        return verify_condition_i(graph, sd)
    if lemma == "condition-ii":
        return verify_condition_ii(graph, sd, args.k, args.budget)
    if sd.layers is None:
        raise UsageError("locality-window needs --embedding")
    S = window(sd, args.i, args.k)
    S_prime = extended_window(sd.layers, args.i, args.k, args.d, args.r, graph)
    return check_locality_window(colored, args.rho, S, S_prime)


def cmd_verify(args: argparse.Namespace) -> int:
    config = _config(args, args.lemma, i=args.i, j=args.j, k=args.k, d=args.d, r=args.r, alpha=args.alpha)
    report = _verify_report(args)
    return _emit(args, config, [{"key": args.lemma, **report}])


# ---------------------------------------------------------------------------
# experiment


def cmd_experiment(args: argparse.Namespace) -> int:
    name = args.name
    if name == "diag-pipeline":
        sizes = args.sizes or [2, 3, 4, 5]
        config = _config(args, name, sizes=sizes)
        records = experiments.run_diag_pipeline(sizes, args.jobs)
    elif name == "slice-split":
        config = _config(args, name, N=args.N, d=args.d, layering=args.layering)
        records = experiments.run_slice_split(args.N, args.d, args.layering, args.budget)
    elif name == "bipartition-sample":
        config = _config(args, name, N=args.N, samples=args.samples)
        records = experiments.run_bipartition_sample(args.N, args.samples, args.seed, args.budget, args.jobs)
    elif name == "flip-lemmas":
        sizes = args.sizes or [4, 5]
        config = _config(args, name, sizes=sizes, parts=args.parts, instances=args.instances)
        records = experiments.run_flip_lemmas(sizes, args.parts, args.instances, args.seed, args.jobs)
    elif name == "subcube-extraction":
        if args.N % 3:
            raise UsageError("subcube-extraction needs --N divisible by 3")
        k = max(args.parts)
        config = _config(args, name, N=args.N, k=k, instances=args.instances)
        records = experiments.run_subcube_extraction(args.N, k, args.instances, args.seed, args.jobs)
    else:
        d = 2 if args.d is None else args.d
        config = _config(args, name, families=args.families, p=args.p, d=d, r=args.r, k=args.k, rho=args.rho)
        records = experiments.run_product_slices(
            args.families, args.p, d, args.r, args.k, args.rho, args.budget, args.jobs
        )
    return _emit(args, config, records)


# ---------------------------------------------------------------------------
# width


def cmd_width(args: argparse.Namespace) -> int:
    graph = _load_graph(args).base
    config = _config(args, args.kind, graph=args.name, max_labels=args.max_labels)
    records = []
    if args.kind in ("treewidth", "both"):
        records.append({"key": "treewidth", "status": PASS, **treewidth_exact(graph, args.budget).to_dict()})
    if args.kind in ("cliquewidth", "both"):
        result = cliquewidth_exact_tiny(graph, args.max_labels, args.budget)
        records.append({"key": "cliquewidth", "status": PASS, **result.to_dict()})
    for record in records:
        if not record["exact"]:
            record["status"] = "bound-only"
    return _emit(args, config, records)


# ---------------------------------------------------------------------------
# transduce


def cmd_transduce(args: argparse.Namespace) -> int:
    graph = as_colored(make_cube(args.N)) if args.N is not None else _load_graph(args)
    config = _config(args, "diag" if args.diag else "custom", N=args.N)
    if args.diag:
        output = apply_diag(graph.base)
        realized, _ = edge_range(graph.base, output)
    else:
        transduction = build(load_json_file(args.transduction, TransductionPayload), "to_transduction")
        run_payload = load_json_file(args.run, RunPayload) if args.run is not None else RunPayload()
        run = run_payload.to_run(graph.n)
        output = apply_transduction(transduction, graph, run)
        realized = None
    record = {
        "key": "output",
        "status": PASS,
        "graph": GraphPayload.from_graph(output),
        "realized_range": realized,
    }
    return _emit(args, config, [record])


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
    "width": cmd_width,
    "transduce": cmd_transduce,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_env()
    logger = get_logger()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"slicelab: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_PASS if exc.code in (0, None) else EXIT_USAGE
    args.seed = default_seed() if args.seed is None else args.seed
    args.budget = default_budget() if args.budget is None else args.budget
    args.jobs = default_jobs() if args.jobs is None else max(1, args.jobs)
    random.seed(args.seed)
    try:
        return COMMANDS[args.command](args)
    except RangeViolation as exc:
        config = _config(args, "range")
        record = {"key": "range", **make_report(FAIL, witness=list(exc.witness), realized_bound=exc.realized)}
        return _emit(args, config, [record])
    except (UsageError, PayloadError, PreconditionError, GraphError, ValueError) as exc:
        logger.error("FAIL command=%s error=%s", args.command, exc)
        sys.stderr.write(f"slicelab: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
