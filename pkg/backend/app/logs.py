import logging
from pathlib import Path

from .settings import get_env

DEFAULT_LOG_PATH = Path(__file__).resolve().parent / "data" / "slicelab.log"


def log_path() -> Path:
    override = get_env("LAB_LOG_PATH")
    return Path(override) if override else DEFAULT_LOG_PATH


def get_logger(name: str = "slicelab") -> logging.Logger:
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    path = log_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    formatter = logging.Formatter(
        fmt="%(asctime)s %(levelname)s %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    return logger
