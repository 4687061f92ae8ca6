"""
In-process LRU cache for large read-only numerical tables.
"""

import threading
from collections import OrderedDict
from collections.abc import Callable
from typing import Any

import structlog

from nlcf.config import get_settings

logger = structlog.get_logger(__name__)


class TableCache:
    """
    Build-once LRU of numpy tables keyed by CacheKeys strings.

    Builders run under the lock, so concurrent callers of the same key wait
    for one build; the lock is reentrant because builders nest (a spectrum
    is built from a weight table). Returned arrays are marked read-only.
    """

    def __init__(self, max_entries: int | None = None) -> None:
        self._entries: OrderedDict[str, Any] = OrderedDict()
        self._lock = threading.RLock()
        self._max_entries = max_entries
        self.hits = 0
        self.misses = 0

    @property
    def max_entries(self) -> int:
        return self._max_entries or get_settings().weight_cache_size

    def get(self, key: str) -> Any | None:
        """Get value from cache."""
        with self._lock:
            value = self._entries.get(key)
            if value is not None:
                self._entries.move_to_end(key)
            return value

    def get_or_build(self, key: str, build: Callable[[], Any]) -> Any:
        """Cached value for key, building it on a miss."""
        with self._lock:
            value = self._entries.get(key)
            if value is not None:
                self._entries.move_to_end(key)
                self.hits += 1
                return value
            self.misses += 1
            value = build()
            if hasattr(value, "setflags"):
                value.setflags(write=False)
            self._entries[key] = value
            while len(self._entries) > self.max_entries:
                evicted, _ = self._entries.popitem(last=False)
                logger.debug("table_cache_evicted", key=evicted)
            logger.debug("table_cache_stored", key=key, entries=len(self._entries))
            return value

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self.hits = 0
            self.misses = 0

    def __len__(self) -> int:
        return len(self._entries)


# Глобальный экземпляр
table_cache = TableCache()
