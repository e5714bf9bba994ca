"""Transcoding backend: cache lookup, in-flight coalescing, worker pool, speculation.

Request flow for a non-stored rank:

  1. cache hit -> answer immediately (and speculate on the next segment).
  2. job already running or queued for this segment -> attach as a waiter.
  3. otherwise enqueue a demand job, register it in-flight, and wait.

Speculation enqueues a job for (same sequence, same rank, index+1) right when
request n is answered or attached, unless the next segment is already cached,
stored at origin, in-flight, or past the end of the sequence. Demand and
speculative jobs share one FIFO queue consumed by K worker slots; an optional
demand-first priority mode exists behind config and is off by default.

Single-flight invariant: per segment descriptor there is never more than one
queued-or-running job; every waiter is resolved exactly once. Jobs whose
segment shows up in the cache by the time a worker dequeues them are dropped
without work (counted, not transcoded).

All shared structures are touched only from loop context (the live HTTP
frontend submits coroutines to the loop thread), so compound check-then-act
sections need no locks: the loop serializes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cache import DEFAULT_CAPACITY_BYTES, SegmentCache
from .content import Catalog, ConfigError, SegmentDescriptor, SegmentPayload
from .sim import Future, Queue, QueueFull
from .transcode import DEMAND, SPECULATIVE, LatencyModel, TranscodeJob, run_transcode

__all__ = [
    "VARIANTS",
    "OverloadError",
    "BackendPolicy",
    "Backend",
]

VARIANTS = ("B", "T", "TC", "TCP", "TCF", "TCPF")

CACHE = "cache"
WAITED = "waited_inflight"
TRANSCODED = "transcoded"


class OverloadError(RuntimeError):
    """Job queue is at its bound; the caller should retry later."""


@dataclass
class BackendPolicy:
    variant: str
    cache_capacity_bytes: int = DEFAULT_CAPACITY_BYTES
    workers: int = 4
    queue_bound: int = 0  # 0 = unbounded
    demand_priority: bool = False

    def __post_init__(self):
        self.variant = self.variant.replace("+", "").upper()
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.workers < 1:
            raise ConfigError("need at least one worker")
        if self.queue_bound < 0:
            raise ConfigError("queue_bound must be >= 0")

    @property
    def cache_enabled(self) -> bool:
        return "C" in self.variant

    @property
    def speculative_enabled(self) -> bool:
        return "P" in self.variant

    def stored_ranks(self, top_rank: int) -> list[int]:
        if self.variant == "B":
            return list(range(1, top_rank + 1))
        if "F" in self.variant:
            return [1, top_rank]
        return [top_rank]


@dataclass
class SpeculationStats:
    enqueued: int = 0
    skipped: dict[str, int] = field(default_factory=dict)

    def skip(self, reason: str) -> str:
        self.skipped[reason] = self.skipped.get(reason, 0) + 1
        return f"skipped:{reason}"


class Backend:
    def __init__(self, loop, catalog: Catalog, policy: BackendPolicy, latency_model: LatencyModel):
        self.loop = loop
        self.catalog = catalog
        self.policy = policy
        self.latency_model = latency_model
        self.cache = SegmentCache(policy.cache_capacity_bytes) if policy.cache_enabled else None
        self.inflight: dict[SegmentDescriptor, Future] = {}
        self._demand_queue = Queue(loop, maxsize=policy.queue_bound)
        self._spec_queue = Queue(loop) if policy.demand_priority else self._demand_queue
        self._wakeup = Queue(loop)  # signals "something was enqueued" in priority mode
        self.jobs: list[TranscodeJob] = []
        self.wasted_avoided = 0
        self.speculation = SpeculationStats()
        self._closed = False
        self._workers = [loop.spawn(self._worker_loop(i), name=f"worker-{i}")
                         for i in range(policy.workers)]

    # -- request path --------------------------------------------------------

    async def handle(self, desc: SegmentDescriptor):
        """Answer a request for a non-stored rank; returns (payload, path)."""
        desc = self.catalog.descriptor(desc.sequence, desc.rep, desc.index)  # validate
        if self.catalog.ladder.is_stored(desc.rep):
            raise ValueError(f"rank {desc.rep} is stored at origin; not a backend request")
        if self.cache is not None:
            payload = self.cache.get(desc)
            if payload is not None:
                self.maybe_speculate(desc)
                return payload, CACHE
        waiter = self.inflight.get(desc)
        if waiter is not None:
            self.maybe_speculate(desc)
            payload = await waiter
            return payload, WAITED
        waiter = self._enqueue(desc, DEMAND)
        self.maybe_speculate(desc)
        payload = await waiter
        return payload, TRANSCODED

    def maybe_speculate(self, current: SegmentDescriptor) -> str:
        """Best-effort enqueue of (same rank, index+1); returns what happened."""
        if not self.policy.speculative_enabled:
            return self.speculation.skip("disabled")
        next_index = current.index + 1
        if next_index >= self.catalog.segment_count(current.sequence):
            return self.speculation.skip("end-of-sequence")
        nxt = self.catalog.descriptor(current.sequence, current.rep, next_index)
        if self.catalog.ladder.is_stored(nxt.rep):
            return self.speculation.skip("stored")
        if self.cache is not None and self.cache.peek(nxt) is not None:
            return self.speculation.skip("cached")
        if nxt in self.inflight:
            return self.speculation.skip("in-flight")
        try:
            self._enqueue(nxt, SPECULATIVE)
        except OverloadError:
            return self.speculation.skip("overload")
        self.speculation.enqueued += 1
        return "enqueued"

    def _enqueue(self, desc: SegmentDescriptor, origin: str) -> Future:
        job = TranscodeJob(desc, self.catalog.ladder.top_rank, origin, enqueued_at=self.loop.now())
        waiter = Future(self.loop)
        self.inflight[desc] = waiter
        queue = self._spec_queue if (origin == SPECULATIVE and self.policy.demand_priority) \
            else self._demand_queue
        try:
            queue.put_nowait(job)
        except QueueFull:
            del self.inflight[desc]
            raise OverloadError(f"job queue full at {self.policy.queue_bound}") from None
        if self.policy.demand_priority:
            self._wakeup.put_nowait(None, force=True)
        self.jobs.append(job)
        return waiter

    # -- worker side -----------------------------------------------------------

    async def _next_job(self):
        if not self.policy.demand_priority:
            return await self._demand_queue.get()
        while True:
            if len(self._demand_queue):
                return (await self._demand_queue.get())
            if len(self._spec_queue):
                return (await self._spec_queue.get())
            await self._wakeup.get()
            if self._closed:
                return None

    async def _worker_loop(self, worker_id: int):
        sampler = self.latency_model.sampler(worker_id)
        while True:
            job = await self._next_job()
            if job is None:
                return
            desc = job.target
            cached = self.cache.peek(desc) if self.cache is not None else None
            if cached is not None:
                job.outcome = "dropped"
                self.wasted_avoided += 1
                self._resolve(desc, cached, None)
                continue
            try:
                payload = await run_transcode(self.loop, job, self.catalog, sampler)
            except Exception as err:  # noqa: BLE001 - waiters must hear about any failure
                job.outcome = "failed"
                self._resolve(desc, None, err)
                continue
            if self.cache is not None:
                self.cache.put(desc, payload)
            self._resolve(desc, payload, None)

    def _resolve(self, desc: SegmentDescriptor, payload: SegmentPayload | None, err) -> None:
        waiter = self.inflight.pop(desc, None)
        if waiter is None or waiter.done():
            return
        if err is not None:
            waiter.set_exception(err)
        else:
            waiter.set_result(payload)

    # -- lifecycle ---------------------------------------------------------------

    def shutdown(self) -> None:
        """Let workers drain the queue, then exit."""
        self._closed = True
        for _ in self._workers:
            self._demand_queue.put_nowait(None, force=True)
            if self.policy.demand_priority:
                self._wakeup.put_nowait(None, force=True)

    def stats(self) -> dict:
        out = {
            "jobs_total": len(self.jobs),
            "jobs_demand": sum(1 for j in self.jobs if j.origin == DEMAND),
            "jobs_speculative": sum(1 for j in self.jobs if j.origin == SPECULATIVE),
            "wasted_avoided": self.wasted_avoided,
            "speculation_enqueued": self.speculation.enqueued,
            "speculation_skipped": dict(self.speculation.skipped),
        }
        if self.cache is not None:
            out["cache"] = self.cache.stats()
        return out
