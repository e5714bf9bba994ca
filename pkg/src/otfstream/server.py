"""Media frontend: answers manifest and segment requests.

Stored ranks are served straight from the catalog; every other rank is
forwarded to the transcoding backend. Each segment request appends exactly
one RequestRecord with arrival/response timestamps from the experiment clock
and the path the answer took (storage, cache, waited_inflight, transcoded,
or error). Manifest fetches are not recorded: they are catalog plumbing, not
part of the segment workload under study.

This class is transport-neutral: the virtual-mode client calls it directly
as an in-process request channel, and the live HTTP listener wraps the same
methods, so both modes exercise identical decision code. Records are buffered
in memory and flushed by the metrics sink at experiment end.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .backend import Backend
from .content import Catalog, NotFoundError, SegmentPayload

__all__ = ["STORAGE", "ERROR", "RequestRecord", "MediaServer"]

STORAGE = "storage"
ERROR = "error"


@dataclass(frozen=True)
class RequestRecord:
    request_id: int
    sequence: str
    rep: int
    index: int
    arrival_s: float
    response_s: float
    path: str
    nbytes: int

    @property
    def latency_s(self) -> float:
        return self.response_s - self.arrival_s


class MediaServer:
    def __init__(self, loop, catalog: Catalog, backend: Backend):
        self.loop = loop
        self.catalog = catalog
        self.backend = backend
        self.records: list[RequestRecord] = []
        self._ids = itertools.count()

    def manifest(self, seq: str) -> dict:
        return self.catalog.manifest_for(seq)

    def manifest_bytes(self, seq: str) -> bytes:
        return json.dumps(self.manifest(seq), sort_keys=True).encode("utf-8")

    async def segment(self, seq: str, rep: int, index: int) -> tuple[SegmentPayload, str]:
        """Answer one segment request; always appends exactly one record."""
        request_id = next(self._ids)
        arrival = self.loop.now()
        try:
            desc = self.catalog.descriptor(seq, rep, index)
            if self.catalog.ladder.is_stored(rep):
                payload = self.catalog.get_segment(desc)
                path = STORAGE
            else:
                payload, path = await self.backend.handle(desc)
        except BaseException:
            self.records.append(RequestRecord(
                request_id, seq, rep, index, arrival, self.loop.now(), ERROR, 0))
            raise
        self.records.append(RequestRecord(
            request_id, seq, rep, index, arrival, self.loop.now(), path, payload.size))
        return payload, path
