import json
import time
from multiprocessing import Pool
from typing import Any, Callable, Iterable, Optional

from .cache_db import (
    DONE,
    FAILED,
    QUEUED,
    RUNNING,
    cleanup_stale_jobs,
    enqueue_job,
    fetch_next_job,
    get_job,
    init_db,
    update_job_status,
)
from .celery_app import TASK_NAME, celery_app
from .flips import (
    PreconditionError,
    check_all_flip_lemmas,
    extract_avoiding_subcube,
    flipped_cube_instance,
    small_part_instance,
    verify_cube_witness,
)
from .graphs import graph_by_name, graph_metrics, induced_subgraph, make_cube, make_diag_cube
from .logs import get_logger
from .reports import BOUND_ONLY, FAIL, PASS, merge_status
from .settings import get_env, get_int_env
from .slices import (
    build_slice_decomposition,
    check_locality_window,
    extended_window,
    identity_embedding,
    slice_window_tw_bound,
    window,
)
from .transduce import apply_diag, check_flip_reconstruction, edge_range
from .width import treewidth_exact

ERROR = "error"


class JobError(RuntimeError):
    pass


def _flip_instance_job(payload: dict) -> dict:
    fs = flipped_cube_instance(
        payload["N"],
        payload["k"],
        payload["seed"],
        isolated=payload.get("isolated", ()),
    )
    reports = check_all_flip_lemmas(fs, payload.get("alpha"))
    if "diameter-bound" in reports:
        reports["flip-reconstruction"] = check_flip_reconstruction(fs, payload.get("alpha"))
    checks = {
        name: {"status": report["status"], "realized_bound": report.get("realized_bound")}
        for name, report in sorted(reports.items())
    }
    witnesses = {name: report["witness"] for name, report in reports.items() if report["status"] == FAIL}
    return {
        "N": payload["N"],
        "k": payload["k"],
        "seed": payload["seed"],
        "status": merge_status(report["status"] for report in reports.values()),
        "checks": checks,
        "witnesses": witnesses,
    }


def _subcube_instance_job(payload: dict) -> dict:
    fs = small_part_instance(payload["N"], payload["k"], payload["seed"], payload["size"])
    record = {"N": payload["N"], "k": payload["k"], "seed": payload["seed"], "size": payload["size"]}
    try:
        sub = extract_avoiding_subcube(fs, 1)
        box = verify_cube_witness(sub)
    except PreconditionError as exc:
        return {**record, "status": FAIL, "witness": exc.witness, "error": str(exc)}
    avoids = not sub.part(1)
    return {
        **record,
        "status": PASS if avoids and box.side == payload["N"] // 3 else FAIL,
        "side": box.side,
        "avoids_part": avoids,
        "vertices": sub.graph.n,
    }


def _bipartition_job(payload: dict) -> dict:
    graph = make_diag_cube(payload["N"])
    mask = payload["mask"]
    budget = payload.get("budget")
    first = [v for v in range(graph.n) if mask >> v & 1]
    second = [v for v in range(graph.n) if not mask >> v & 1]
    sides = [treewidth_exact(induced_subgraph(graph, side)[0], budget) for side in (first, second)]
    return {
        "N": payload["N"],
        "mask": mask,
        "sizes": [len(first), len(second)],
        "treewidths": [{"lower": tw.lower, "upper": tw.upper, "exact": tw.exact} for tw in sides],
        "max_side": max(tw.upper for tw in sides),
        "max_side_lower": max(tw.lower for tw in sides),
        "status": PASS if all(tw.exact for tw in sides) else BOUND_ONLY,
    }


def _slice_window_job(payload: dict) -> dict:
    budget = payload.get("budget")
    target = graph_by_name(payload["family"])
    d, r, k, i = payload["d"], payload["r"], payload["k"], payload["i"]
    graph, emb = identity_embedding(target, payload["p"])
    sd = build_slice_decomposition(graph, emb, d, r)
    S = window(sd, i, k)
    S_prime = extended_window(sd.layers, i, k, d, r, graph)
    locality = check_locality_window(graph, payload["rho"], S, S_prime)
    tw_target = treewidth_exact(target, budget)
    bound = slice_window_tw_bound(k, d, r, tw_target.upper)
    tw_window = treewidth_exact(induced_subgraph(graph, S_prime)[0], budget)
    if tw_window.lower > bound:
        tw_status = FAIL
    elif tw_window.exact and tw_target.exact:
        tw_status = PASS
    else:
        tw_status = BOUND_ONLY
    return {
        "family": payload["family"],
        "p": payload["p"],
        "d": d,
        "r": r,
        "k": k,
        "i": i,
        "window": len(S),
        "extended": len(S_prime),
        "locality": locality["status"],
        "locality_witness": locality["witness"],
        "treewidth": tw_window.upper,
        "bound": bound,
        "status": merge_status([locality["status"], tw_status]),
    }


def _diag_instance_job(payload: dict) -> dict:
    N = payload["N"]
    cube = make_cube(N)
    output = apply_diag(cube)
    expected = make_diag_cube(N)
    realized, witness = edge_range(cube, output)
    diff = sorted(output.edges ^ expected.edges)
    return {
        "N": N,
        "status": PASS if not diff else FAIL,
        "equal": not diff,
        "witness": list(diff[0]) if diff else None,
        "edges": len(output.edges),
        "realized_range": realized,
        "range_witness": list(witness) if witness else None,
        "max_degree": graph_metrics(output).max_degree,
    }


JOB_KINDS: dict[str, Callable[[dict], dict]] = {
    "flip-instance": _flip_instance_job,
    "subcube-instance": _subcube_instance_job,
    "bipartition": _bipartition_job,
    "slice-window": _slice_window_job,
    "diag-instance": _diag_instance_job,
}


def run_job(kind: str, payload: dict) -> dict:
    """Run one job in-process; failures come back as an error record, not an exception."""
    logger = get_logger()
    handler = JOB_KINDS.get(kind)
    if handler is None:
        raise JobError(f"Unknown job kind: {kind}")
    key = payload.get("key")
    start = time.monotonic()
    logger.info("START job=%s key=%s", kind, key)
    try:
        result = handler(payload)
    except (ValueError, RuntimeError) as exc:
        logger.error("FAIL job=%s key=%s error=%s", kind, key, exc)
        return {"key": key, "status": ERROR, "error": str(exc)}
    logger.info("DONE job=%s key=%s elapsed=%.2fs", kind, key, time.monotonic() - start)
    return {"key": key, **result}


def _run_job_args(args: tuple[str, dict]) -> dict:
    return run_job(*args)


def _finish_claimed(job: dict) -> None:
    job_id = job["id"]
    try:
        payload = json.loads(job.get("payload_json") or "{}")
        result = run_job(job.get("kind"), payload)
    except (JobError, json.JSONDecodeError) as exc:
        update_job_status(job_id, status=FAILED, error=str(exc))
        return
    if result.get("status") == ERROR:
        update_job_status(job_id, status=FAILED, result=result, error=result.get("error"))
    else:
        update_job_status(job_id, status=DONE, result=result)


def _process_job_by_id(job_id: str) -> None:
    job = get_job(job_id)
    if not job:
        return
    status = job.get("status")
    if status not in {QUEUED, RUNNING}:
        return
    update_job_status(job_id, status=RUNNING)
    _finish_claimed(job)


def drain_jobs(kind: Optional[str] = None) -> int:
    """Claim and run queued jobs from the job table until none are left; returns how many ran."""
    logger = get_logger()
    stale_seconds = get_int_env("LAB_JOB_STALE_SECONDS", 900)
    cleaned = cleanup_stale_jobs(stale_seconds)
    if cleaned:
        logger.warning("CLEANUP stale jobs=%s older_than=%ss", cleaned, stale_seconds)
    count = 0
    while True:
        job = fetch_next_job(kind)
        if job is None:
            return count
        _finish_claimed(job)
        count += 1


if celery_app:

    @celery_app.task(name=TASK_NAME)
    def celery_run_job(job_id: str) -> None:
        _process_job_by_id(job_id)


def _collected(job: dict, payload: dict) -> Optional[dict]:
    """The job's record once it has finished, else None."""
    if job.get("status") == DONE:
        return job["result"]
    if job.get("status") == FAILED:
        return job.get("result") or {"key": payload.get("key"), "status": ERROR, "error": job.get("error")}
    return None


def _run_celery(kind: str, payloads: list[dict]) -> list[dict]:
    logger = get_logger()
    init_db()
    queue_name = get_env("CELERY_QUEUE_NAME", "slicelab")
    timeout = get_int_env("LAB_JOB_TIMEOUT_SECONDS", 600)
    poll_seconds = max(1, get_int_env("LAB_JOB_POLL_SECONDS", 1))
    cleanup_stale_jobs(get_int_env("LAB_JOB_STALE_SECONDS", 900))
    pending = {}
    for payload in payloads:
        job_id = enqueue_job(kind, payload)
        celery_run_job.apply_async(args=[job_id], queue=queue_name)
        pending[job_id] = payload
    logger.info("DISPATCH job=%s count=%s queue=%s", kind, len(pending), queue_name)
    results = []
    deadline = time.monotonic() + timeout
    while pending:
        for job_id in list(pending):
            record = _collected(get_job(job_id) or {}, pending[job_id])
            if record is not None:
                results.append(record)
                pending.pop(job_id)
        if not pending:
            break
        if time.monotonic() > deadline:
            raise JobError(f"{len(pending)} {kind} jobs still pending after {timeout}s")
        time.sleep(poll_seconds)
    return results


def _run_sqlite(kind: str, payloads: list[dict]) -> list[dict]:
    """Queue the batch in the job table, then work it off in this process."""
    logger = get_logger()
    init_db()
    pending = {enqueue_job(kind, payload): payload for payload in payloads}
    ran = drain_jobs(kind)
    logger.info("DRAIN job=%s queued=%s ran=%s", kind, len(pending), ran)
    results = []
    for job_id, payload in pending.items():
        record = _collected(get_job(job_id) or {}, payload)
        if record is None:
            raise JobError(f"{kind} job {job_id} did not finish")
        results.append(record)
    return results


def _sort_key(record: dict) -> str:
    return str(record.get("key"))


def queue_backend() -> str:
    """``celery`` when enabled and a broker exists, ``sqlite`` for the job table, else ``local``."""
    backend = (get_env("LAB_QUEUE_BACKEND", "") or "").strip().lower()
    if backend == "celery":
        return "celery" if celery_app is not None else "local"
    return "sqlite" if backend == "sqlite" else "local"


def run_jobs(kind: str, payloads: Iterable[dict], jobs: Optional[int] = None) -> list[dict]:
    """Run a batch of jobs and return their records sorted by payload key."""
    if kind not in JOB_KINDS:
        raise JobError(f"Unknown job kind: {kind}")
    payloads = list(payloads)
    jobs = max(1, jobs or 1)
    backend = queue_backend()
    if backend == "celery":
        results = _run_celery(kind, payloads)
    elif backend == "sqlite":
        results = _run_sqlite(kind, payloads)
    elif jobs > 1 and len(payloads) > 1:
        with Pool(processes=min(jobs, len(payloads))) as pool:
            results = list(pool.imap_unordered(_run_job_args, [(kind, p) for p in payloads]))
    else:
        results = [run_job(kind, payload) for payload in payloads]
    return sorted(results, key=_sort_key)


def summarize(records: list[dict]) -> dict[str, Any]:
    statuses = [record.get("status") for record in records]
    return {
        "count": len(records),
        "errors": sum(1 for status in statuses if status == ERROR),
        "status": ERROR if ERROR in statuses else merge_status(s for s in statuses if s != ERROR),
    }
