import threading
from typing import Any, Callable, Hashable, Optional


class MemoCache:
    """Populate-once cache; the first computed value for a key wins."""

    def __init__(self, max_entries: int = 4096) -> None:
        self.max_entries = max_entries
        self._store: dict[Hashable, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Optional[Any]:
        return self._store.get(key)

    def set(self, key: Hashable, value: Any) -> Any:
        with self._lock:
            if key in self._store:
                return self._store[key]
            if len(self._store) >= self.max_entries:
                self._store.pop(next(iter(self._store)))
            self._store[key] = value
            return value

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        value = self._store.get(key)
        if value is not None:
            return value
        return self.set(key, compute())

    def __len__(self) -> int:
        return len(self._store)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
