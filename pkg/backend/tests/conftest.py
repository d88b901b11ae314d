import sys
from pathlib import Path

import pytest

backend_root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(backend_root))


@pytest.fixture(autouse=True)
def lab_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("LAB_DB_PATH", str(tmp_path / "lab.sqlite"))
    monkeypatch.setenv("LAB_LOG_PATH", str(tmp_path / "lab.log"))
    monkeypatch.delenv("LAB_QUEUE_BACKEND", raising=False)
    monkeypatch.delenv("LAB_WIDTH_CACHE", raising=False)
    return tmp_path
