import hashlib
import json
import secrets
import sqlite3
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Optional

from .graphs import Graph
from .settings import get_env

DB_PATH = Path(__file__).resolve().parent / "data" / "slicelab.sqlite"

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"

_SCHEMA = """
CREATE TABLE IF NOT EXISTS lab_jobs (
    id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    status TEXT NOT NULL,
    payload_json TEXT,
    result_json TEXT,
    error TEXT,
    created_at INTEGER,
    updated_at INTEGER
);
CREATE INDEX IF NOT EXISTS lab_jobs_status ON lab_jobs (status, created_at);
CREATE TABLE IF NOT EXISTS width_cache (
    fingerprint TEXT NOT NULL,
    kind TEXT NOT NULL,
    budget INTEGER,
    result_json TEXT NOT NULL,
    created_at INTEGER,
    PRIMARY KEY (fingerprint, kind)
);
"""


def _db_path() -> Path:
    override = get_env("LAB_DB_PATH")
    return Path(override) if override else DB_PATH


@contextmanager
def _session() -> Iterator[sqlite3.Connection]:
    path = _db_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(path)
    conn.row_factory = sqlite3.Row
    try:
        conn.execute("PRAGMA journal_mode=WAL;")
        with conn:
            yield conn
    finally:
        conn.close()


def init_db() -> None:
    with _session() as conn:
        conn.executescript(_SCHEMA)


def _now_ts() -> int:
    return int(time.time())


def _loads(raw: Optional[str]) -> Optional[Any]:
    if not raw:
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return None


def graph_fingerprint(graph: Graph) -> str:
    """Stable id of an unlabelled vertex-numbered graph."""
    canonical = json.dumps({"n": graph.n, "edges": sorted(graph.edges)}, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def get_cached_width(fingerprint: str, kind: str) -> Optional[dict]:
    init_db()
    with _session() as conn:
        row = conn.execute(
            "SELECT result_json FROM width_cache WHERE fingerprint = ? AND kind = ?",
            (fingerprint, kind),
        ).fetchone()
    return _loads(row["result_json"]) if row else None


def put_cached_width(fingerprint: str, kind: str, result: dict, budget: Optional[int] = None) -> None:
    init_db()
    with _session() as conn:
        conn.execute(
            "INSERT OR REPLACE INTO width_cache (fingerprint, kind, budget, result_json, created_at) "
            "VALUES (?, ?, ?, ?, ?)",
            (fingerprint, kind, budget, json.dumps(result), _now_ts()),
        )


def _job_from_row(row: sqlite3.Row) -> dict:
    job = dict(row)
    job["result"] = _loads(job.get("result_json"))
    return job


def enqueue_job(kind: str, payload: dict[str, Any]) -> str:
    job_id = secrets.token_hex(12)
    now = _now_ts()
    with _session() as conn:
        conn.execute(
            "INSERT INTO lab_jobs (id, kind, status, payload_json, created_at, updated_at) "
            "VALUES (?, ?, ?, ?, ?, ?)",
            (job_id, kind, QUEUED, json.dumps(payload), now, now),
        )
    return job_id


def fetch_next_job(kind: Optional[str] = None) -> Optional[dict]:
    """Claim the oldest queued job, optionally of one kind, and mark it running."""
    query = "SELECT * FROM lab_jobs WHERE status = ?"
    params: list[Any] = [QUEUED]
    if kind is not None:
        query += " AND kind = ?"
        params.append(kind)
    query += " ORDER BY created_at, rowid LIMIT 1"
    with _session() as conn:
        row = conn.execute(query, params).fetchone()
        if row is None:
            return None
        conn.execute(
            "UPDATE lab_jobs SET status = ?, updated_at = ? WHERE id = ?",
            (RUNNING, _now_ts(), row["id"]),
        )
    return _job_from_row(row)


def cleanup_stale_jobs(stale_seconds: int, *, requeue: bool = False) -> int:
    """Fail (or requeue) running jobs untouched for ``stale_seconds``; returns how many."""
    if stale_seconds <= 0:
        return 0
    now = _now_ts()
    if requeue:
        status, error = QUEUED, None
    else:
        status, error = FAILED, f"stale job (> {stale_seconds}s)"
    with _session() as conn:
        cursor = conn.execute(
            "UPDATE lab_jobs SET status = ?, error = ?, updated_at = ? "
            "WHERE status = ? AND updated_at < ?",
            (status, error, now, RUNNING, now - stale_seconds),
        )
        return cursor.rowcount


def update_job_status(
    job_id: str,
    *,
    status: str,
    result: Optional[dict] = None,
    error: Optional[str] = None,
) -> None:
    with _session() as conn:
        conn.execute(
            "UPDATE lab_jobs SET status = ?, result_json = ?, error = ?, updated_at = ? WHERE id = ?",
            (status, json.dumps(result) if result is not None else None, error, _now_ts(), job_id),
        )


def get_job(job_id: str) -> Optional[dict]:
    with _session() as conn:
        row = conn.execute("SELECT * FROM lab_jobs WHERE id = ?", (job_id,)).fetchone()
    return _job_from_row(row) if row else None
