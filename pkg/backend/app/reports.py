from typing import Any, Iterable, Optional

PASS = "pass"
FAIL = "fail"
BOUND_ONLY = "bound-only"

_SEVERITY = {PASS: 0, BOUND_ONLY: 1, FAIL: 2}


def make_report(
    status: str,
    *,
    witness: Optional[Any] = None,
    realized_bound: Optional[Any] = None,
    **details: Any,
) -> dict[str, Any]:
    if status not in _SEVERITY:
        raise ValueError(f"unknown report status: {status}")
    report = {"status": status, "witness": witness, "realized_bound": realized_bound}
    report.update(details)
    return report


def merge_status(statuses: Iterable[str]) -> str:
    """Worst status wins; an empty collection passes."""
    worst = PASS
    for status in statuses:
        if _SEVERITY[status] > _SEVERITY[worst]:
            worst = status
    return worst
