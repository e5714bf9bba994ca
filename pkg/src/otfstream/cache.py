"""Byte-budgeted LRU cache for transcoded segments.

Keys are segment descriptors; values are payload handles. get() refreshes an
entry's recency mark, put() sets it, and insertion evicts entries oldest mark
first until the newcomer fits. A payload larger than the whole budget is
rejected outright, leaving the cache untouched.

All methods are plain synchronous operations: under the virtual clock the
event loop serializes access, and the live server funnels all backend state
through the loop thread, so no locking is needed here.
"""

from __future__ import annotations

import logging
from collections import OrderedDict

from .content import SegmentDescriptor, SegmentPayload

__all__ = ["DEFAULT_CAPACITY_BYTES", "SegmentCache"]

log = logging.getLogger(__name__)

DEFAULT_CAPACITY_BYTES = 134217728  # 128 MB


class SegmentCache:
    def __init__(self, capacity_bytes: int = DEFAULT_CAPACITY_BYTES):
        if capacity_bytes <= 0:
            raise ValueError("cache capacity must be positive")
        self.capacity = capacity_bytes
        self._entries: OrderedDict[SegmentDescriptor, SegmentPayload] = OrderedDict()
        self.current_bytes = 0
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self.rejected = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, desc: SegmentDescriptor) -> bool:
        return desc in self._entries

    def get(self, desc: SegmentDescriptor) -> SegmentPayload | None:
        entry = self._entries.get(desc)
        if entry is None:
            self.misses += 1
            return None
        self._entries.move_to_end(desc)
        self.hits += 1
        return entry

    def peek(self, desc: SegmentDescriptor) -> SegmentPayload | None:
        """Lookup without touching recency or hit/miss counters."""
        return self._entries.get(desc)

    def put(self, desc: SegmentDescriptor, payload: SegmentPayload) -> list[SegmentDescriptor] | None:
        """Insert and return descriptors evicted to make room (oldest first).

        Returns None if the payload exceeds the whole budget; the cache is
        then unchanged.
        """
        size = payload.size
        if size > self.capacity:
            self.rejected += 1
            log.warning("payload %s (%d bytes) exceeds cache capacity %d; not cached",
                        desc, size, self.capacity)
            return None
        if desc in self._entries:
            self.current_bytes -= self._entries[desc].size
            del self._entries[desc]
        evicted = []
        while self.current_bytes + size > self.capacity:
            victim, old = self._entries.popitem(last=False)
            self.current_bytes -= old.size
            self.evictions += 1
            evicted.append(victim)
        self._entries[desc] = payload
        self.current_bytes += size
        return evicted

    def stats(self) -> dict:
        return {
            "capacity_bytes": self.capacity,
            "current_bytes": self.current_bytes,
            "entries": len(self._entries),
            "hits": self.hits,
            "misses": self.misses,
            "evictions": self.evictions,
            "rejected": self.rejected,
        }
