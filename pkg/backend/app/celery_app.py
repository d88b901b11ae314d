from __future__ import annotations

from typing import Optional

from celery import Celery

from .settings import get_env, get_int_env, load_env

TASK_NAME = "slicelab.run_job"
DEFAULT_QUEUE = "slicelab"


def broker_url() -> Optional[str]:
    return get_env("CELERY_BROKER_URL") or get_env("REDIS_URL")


def _build_celery_app() -> Optional[Celery]:
    """Celery app for experiment jobs, or None when no broker is configured.

    Job records live in the sqlite job table, so no result backend is set.
    """
    load_env()
    broker = broker_url()
    if not broker:
        return None
    queue_name = get_env("CELERY_QUEUE_NAME", DEFAULT_QUEUE)
    app = Celery("slicelab", broker=broker, include=["app.job_queue"])
    app.conf.update(
        task_serializer="json",
        accept_content=["json"],
        task_ignore_result=True,
        task_default_queue=queue_name,
        task_routes={TASK_NAME: {"queue": queue_name}},
        # exact width searches are long and CPU bound
        worker_prefetch_multiplier=1,
        task_acks_late=True,
        task_time_limit=get_int_env("LAB_JOB_TIMEOUT_SECONDS", 600),
        timezone="UTC",
    )
    return app


celery_app = _build_celery_app()

if celery_app:
    from . import job_queue  # noqa: F401

# `celery -A app.celery_app worker` looks these up
celery = celery_app
app = celery_app
