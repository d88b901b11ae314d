import os
from pathlib import Path
from typing import Optional

_ENVFILE_PREFIX = "__ENVFILE__"

DEFAULT_SEED = 0
DEFAULT_BUDGET = 200_000
DEFAULT_JOBS = 1


def read_env_file(path: Path) -> dict[str, str]:
    """KEY=VALUE pairs from a dotenv file; ``export`` prefixes and trailing comments are dropped."""
    try:
        lines = path.read_text().splitlines()
    except OSError:
        return {}
    values: dict[str, str] = {}
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("export "):
            stripped = stripped[len("export "):].lstrip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if value[:1] in {"'", '"'} and value.endswith(value[0]) and len(value) > 1:
            value = value[1:-1]
        else:
            value = value.split(" #", 1)[0].strip()
        if key:
            values[key] = value
    return values


def load_env(path: Optional[Path] = None) -> None:
    """Export the project ``.env`` into ``os.environ``; file values win and are marked."""
    if path is None:
        path = Path(__file__).resolve().parents[2] / ".env"
    for key, value in read_env_file(path).items():
        os.environ[key] = value
        os.environ[f"{_ENVFILE_PREFIX}{key}"] = "1"


def get_env(key: str, default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(key, default)


def is_envfile_key(key: str) -> bool:
    return os.environ.get(f"{_ENVFILE_PREFIX}{key}") == "1"


def get_int_env(key: str, default: int) -> int:
    raw = (get_env(key) or "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def get_bool_env(key: str, default: bool = False) -> bool:
    raw = (get_env(key) or "").strip().lower()
    if raw in {"1", "true", "yes", "y", "on"}:
        return True
    if raw in {"0", "false", "no", "n", "off"}:
        return False
    return default


def default_seed() -> int:
    return get_int_env("LAB_SEED", DEFAULT_SEED)


def default_budget() -> int:
    return max(1, get_int_env("LAB_BUDGET", DEFAULT_BUDGET))


def default_jobs() -> int:
    return max(1, get_int_env("LAB_JOBS", DEFAULT_JOBS))
