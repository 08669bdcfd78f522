"""Thread-safe LRU cache bounded by the summed size of its entries."""

from __future__ import annotations

import threading
from collections import OrderedDict
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Hashable


class ByteLRUCache:
    """Least-recently-used cache whose capacity is counted in bytes.

    An entry larger than the whole capacity is not stored.
    """

    def __init__(self, capacity_bytes: int) -> None:
        self.capacity_bytes = capacity_bytes
        self.size_bytes = 0
        self.hits = 0
        self.misses = 0
        self._entries: OrderedDict[Hashable, tuple[object, int]] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: Hashable) -> object | None:
        with self._lock:
            item = self._entries.get(key)
            if item is None:
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return item[0]

    def put(self, key: Hashable, value: object, size: int) -> None:
        if size > self.capacity_bytes:
            return
        with self._lock:
            old = self._entries.pop(key, None)
            if old is not None:
                self.size_bytes -= old[1]
            self._entries[key] = (value, size)
            self.size_bytes += size
            while self.size_bytes > self.capacity_bytes:
                _, (_, evicted) = self._entries.popitem(last=False)
                self.size_bytes -= evicted

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self.size_bytes = 0
