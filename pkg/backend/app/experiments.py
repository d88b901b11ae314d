"""End-to-end pipelines. Each returns JSON-ready records carrying a ``key``."""
import random
import time
from typing import Iterable, Optional

from .flips import SMALL_PART_LIMIT
from .graphs import graph_by_name, induced_subgraph, make_cube, make_diag_cube
from .job_queue import run_jobs, summarize
from .logic import check_range, interpret
from .logs import get_logger
from .reports import FAIL
from .slices import (
    SliceError,
    build_slice_decomposition,
    check_even_split,
    cube_axis_embedding,
    cube_corner_embedding,
    even_odd_split,
    identity_embedding,
    verify_condition_i,
    window_starts,
)
from .transduce import apply_diag, diag_transduction
from .width import treewidth_exact

BIPARTITION_CAVEAT = (
    "evidence only: the obstruction statement quantifies over every bipartition, "
    "this run checks the listed ones"
)
DEFAULT_RHO = "dist(x,y) <= 2 & !(x = y)"
LAYERINGS = ("axis", "corner")


def _width_record(tw) -> dict:
    return {"lower": tw.lower, "upper": tw.upper, "exact": tw.exact}


def run_diag_pipeline(sizes: Iterable[int], jobs: int = 1) -> list[dict]:
    logger = get_logger()
    sizes = list(sizes)
    start = time.monotonic()
    logger.info("START experiment=diag-pipeline sizes=%s", sizes)
    payloads = [{"key": f"diag:{N:02d}", "N": N} for N in sizes]
    records = run_jobs("diag-instance", payloads, jobs)
    declared = diag_transduction().declared_range
    for record in records:
        if record.get("status") != "error" and record["realized_range"] > declared:
            record["status"] = FAIL
    logger.info("DONE experiment=diag-pipeline elapsed=%.2fs", time.monotonic() - start)
    return records + [{"key": "summary", "declared_range": declared, **summarize(records)}]


def run_slice_split(
    N: int,
    d: Optional[int] = None,
    layering: str = "axis",
    budget: Optional[int] = None,
) -> list[dict]:
    """Slice Q̂_N, check condition (i) and report treewidth per slice and per side of the even/odd split.

    ``axis`` slices Q̂_N by its second coordinate (default d = 1); ``corner``
    slices the source cube by i+j+k and checks the diagonal cube against it
    (default d = 3, the transduction's range).
    """
    if layering not in LAYERINGS:
        raise SliceError(f"unknown layering {layering!r}, expected one of {LAYERINGS}")
    logger = get_logger()
    start = time.monotonic()
    if layering == "axis":
        d = 1 if d is None else d
        diag = make_diag_cube(N)
        sd = build_slice_decomposition(diag, cube_axis_embedding(N), d)
    else:
        d = diag_transduction().declared_range if d is None else d
        cube = make_cube(N)
        diag = apply_diag(cube)
        sd = build_slice_decomposition(cube, cube_corner_embedding(N), d)
    logger.info("START experiment=slice-split N=%s d=%s layering=%s slices=%s", N, d, layering, sd.length)
    records = [{"key": "condition-i", "N": N, "d": d, "layering": layering, **verify_condition_i(diag, sd)}]
    for i in window_starts(sd, 1):
        sub, _ = induced_subgraph(diag, sd.parts[i - 1])
        records.append(
            {"key": f"slice:{i:03d}", "size": sub.n, "treewidth": _width_record(treewidth_exact(sub, budget))}
        )
    split = check_even_split(diag, sd, budget)
    even, odd = even_odd_split(sd)
    sides = [treewidth_exact(induced_subgraph(diag, side)[0], budget) for side in (even, odd)]
    records.append(
        {
            "key": "split",
            **split,
            "even_side": _width_record(sides[0]),
            "odd_side": _width_record(sides[1]),
        }
    )
    logger.info("DONE experiment=slice-split N=%s elapsed=%.2fs", N, time.monotonic() - start)
    return records


def bipartition_masks(n: int, samples: int, seed: int) -> tuple[list[int], bool]:
    """All 2^n masks when they fit in ``samples``, otherwise ``samples`` seeded draws."""
    if 2 ** n <= samples:
        return list(range(2 ** n)), True
    rng = random.Random(seed)
    return [rng.getrandbits(n) for _ in range(samples)], False


def run_bipartition_sample(
    N: int,
    samples: int = 10_000,
    seed: int = 0,
    budget: Optional[int] = None,
    jobs: int = 1,
) -> list[dict]:
    logger = get_logger()
    start = time.monotonic()
    masks, exhaustive = bipartition_masks(N ** 3, samples, seed)
    logger.info(
        "START experiment=bipartition-sample N=%s count=%s exhaustive=%s seed=%s",
        N,
        len(masks),
        exhaustive,
        seed,
    )
    payloads = [
        {"key": f"bip:{idx:06d}", "N": N, "mask": mask, "budget": budget}
        for idx, mask in enumerate(masks)
    ]
    records = run_jobs("bipartition", payloads, jobs)
    finished = [record for record in records if record.get("status") != "error"]
    best = min(finished, key=lambda record: (record["max_side"], record["key"]), default=None)
    summary = {
        "key": "summary",
        "N": N,
        "exhaustive": exhaustive,
        "seed": seed,
        "min_max_side": best["max_side"] if best else None,
        "min_mask": best["mask"] if best else None,
        "caveat": BIPARTITION_CAVEAT,
        **summarize(records),
    }
    logger.info("DONE experiment=bipartition-sample N=%s elapsed=%.2fs", N, time.monotonic() - start)
    return records + [summary]


def run_flip_lemmas(
    sizes: Iterable[int] = (4, 5),
    parts: Iterable[int] = (2, 3),
    instances: int = 100,
    seed: int = 0,
    jobs: int = 1,
) -> list[dict]:
    """Seeded flipped cubes through every flip checker; odd instances keep the last part unflipped."""
    logger = get_logger()
    start = time.monotonic()
    payloads = []
    for N in sizes:
        for k in parts:
            for s in range(instances):
                payloads.append(
                    {
                        "key": f"flip:N{N}:k{k}:{s:03d}",
                        "N": N,
                        "k": k,
                        "seed": seed + s,
                        "isolated": [k] if k > 1 and s % 2 else [],
                    }
                )
    logger.info("START experiment=flip-lemmas count=%s seed=%s", len(payloads), seed)
    records = run_jobs("flip-instance", payloads, jobs)
    logger.info("DONE experiment=flip-lemmas elapsed=%.2fs", time.monotonic() - start)
    return records + [{"key": "summary", **summarize(records)}]


def run_subcube_extraction(
    N: int = 9,
    k: int = 3,
    instances: int = 100,
    seed: int = 0,
    jobs: int = 1,
) -> list[dict]:
    """Seeded Q_N instances with a part of 1..12 vertices; each must yield a flipped Q_{N//3} avoiding it."""
    logger = get_logger()
    start = time.monotonic()
    payloads = [
        {
            "key": f"subcube:N{N}:{s:03d}",
            "N": N,
            "k": k,
            "seed": seed + s,
            "size": 1 + s % SMALL_PART_LIMIT,
        }
        for s in range(instances)
    ]
    logger.info("START experiment=subcube-extraction N=%s count=%s seed=%s", N, len(payloads), seed)
    records = run_jobs("subcube-instance", payloads, jobs)
    logger.info("DONE experiment=subcube-extraction elapsed=%.2fs", time.monotonic() - start)
    return records + [{"key": "summary", **summarize(records)}]


def run_product_slices(
    families: Iterable[str] = ("P3", "P4", "C4"),
    p: int = 6,
    d: int = 2,
    r: int = 2,
    k: int = 1,
    rho: str = DEFAULT_RHO,
    budget: Optional[int] = None,
    jobs: int = 1,
) -> list[dict]:
    """The slice construction on H ⊠ P_p: condition (i) for rho(G), then per-window locality and treewidth."""
    logger = get_logger()
    start = time.monotonic()
    records = []
    payloads = []
    for family in families:
        graph, emb = identity_embedding(graph_by_name(family), p)
        sd = build_slice_decomposition(graph, emb, d, r)
        output = interpret(graph, rho)
        range_report = check_range(rho, graph, d)
        records.append(
            {
                "key": f"{family}:condition-i",
                "family": family,
                "range": range_report["realized_bound"],
                **verify_condition_i(output, sd),
            }
        )
        for i in window_starts(sd, k):
            payloads.append(
                {
                    "key": f"{family}:window:{i:03d}",
                    "family": family,
                    "p": p,
                    "d": d,
                    "r": r,
                    "k": k,
                    "i": i,
                    "rho": rho,
                    "budget": budget,
                }
            )
    logger.info("START experiment=product-slices windows=%s", len(payloads))
    records.extend(run_jobs("slice-window", payloads, jobs))
    logger.info("DONE experiment=product-slices elapsed=%.2fs", time.monotonic() - start)
    records.sort(key=lambda record: record["key"])
    return records + [{"key": "summary", **summarize(records)}]
