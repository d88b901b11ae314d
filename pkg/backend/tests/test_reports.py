import pytest

from app.cache import MemoCache
from app.reports import BOUND_ONLY, FAIL, PASS, make_report, merge_status


def test_make_report_shape():
    report = make_report(FAIL, witness=[0, 1], realized_bound=4, bound=3)
    assert report == {"status": FAIL, "witness": [0, 1], "realized_bound": 4, "bound": 3}
    with pytest.raises(ValueError):
        make_report("maybe")


def test_merge_status_takes_the_worst():
    assert merge_status([]) == PASS
    assert merge_status([PASS, BOUND_ONLY]) == BOUND_ONLY
    assert merge_status([BOUND_ONLY, FAIL, PASS]) == FAIL


def test_memo_cache_first_value_wins():
    cache = MemoCache(max_entries=2)
    assert cache.get_or_compute("a", lambda: 1) == 1
    assert cache.get_or_compute("a", lambda: 2) == 1
    cache.set("b", 3)
    cache.set("c", 4)
    assert len(cache) == 2
    assert cache.get("a") is None
    cache.clear()
    assert len(cache) == 0
