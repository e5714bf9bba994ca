"""Emulated streaming player: download loop, buffer model, quality adaptation.

A session sequentially downloads one sequence's segments, each shaped by the
client's bandwidth trace. Playback starts once the startup threshold is
buffered, drains 1 s of media per second of clock, stalls at an empty buffer,
and resumes at the resume threshold. Downloads pause while the buffer sits at
or above target and restart as soon as it drops below.

Quality selection is a deterministic rule table over the buffer level and an
EWMA throughput estimate (measured over the transfer phase only, excluding
request latency and server think time):

  (a) buffer below panic          -> lowest rank (emergency fallback)
  (b) panic <= buffer < safe      -> one rank down
  (c) buffer >= safe and estimate
      >= next rank's bitrate x headroom -> one rank up
  (d) otherwise                   -> hold

The buffer is reconciled lazily: state carries (level, phase, last sync time)
and advance(now) replays drain, stall onset, and stall time analytically, so
no periodic ticks are needed and virtual-time runs stay event-driven.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .backend import OverloadError
from .netem import DEFAULT_LATENCY_S, BandwidthTrace, shaped_download

__all__ = [
    "STARTUP", "PLAYING", "STALLED", "FINISHED",
    "BufferConfig", "ClientConfig", "PlayerBuffer",
    "select_quality", "SegmentRecord", "SessionReport",
    "InProcessEndpoint", "run_session",
]

log = logging.getLogger(__name__)

STARTUP = "startup"
PLAYING = "playing"
STALLED = "stalled"
FINISHED = "finished"

_EPS = 1e-9  # nudge below the target threshold so a paused download restarts strictly under it


@dataclass(frozen=True)
class BufferConfig:
    target_s: float = 12.0
    safe_s: float = 8.0
    panic_s: float = 2.0
    resume_s: float = 2.0
    startup_s: float = 3.0

    def __post_init__(self):
        if not (self.panic_s < self.startup_s <= self.safe_s < self.target_s):
            raise ValueError("thresholds must satisfy panic < startup <= safe < target")
        if self.resume_s <= 0:
            raise ValueError("resume threshold must be positive")


@dataclass(frozen=True)
class ClientConfig:
    buffer: BufferConfig = field(default_factory=BufferConfig)
    ewma_alpha: float = 0.3
    headroom: float = 1.2
    retries: int = 3
    retry_backoff_s: float = 0.5
    latency_s: float = DEFAULT_LATENCY_S


class PlayerBuffer:
    """Buffer state with lazy reconciliation against the experiment clock."""

    __slots__ = ("cfg", "level", "phase", "position", "last_sync",
                 "stall_events", "stall_time", "started_at", "session_start")

    def __init__(self, cfg: BufferConfig, now: float):
        self.cfg = cfg
        self.level = 0.0
        self.phase = STARTUP
        self.position = 0.0
        self.last_sync = now
        self.stall_events = 0
        self.stall_time = 0.0
        self.started_at = None  # playback start time, for startup delay
        self.session_start = now

    def advance(self, now: float) -> None:
        """Replay drain/stall bookkeeping from the last sync point to `now`."""
        dt = now - self.last_sync
        if dt < 0:
            raise ValueError("clock went backwards")
        self.last_sync = now
        if self.phase == PLAYING:
            if self.level >= dt - _EPS:
                # exact ties lose a few ulps to repeated float arithmetic;
                # a deficit below _EPS is rounding noise, not a real stall
                self.level = max(0.0, self.level - dt)
                self.position += dt
            else:
                # ran dry mid-interval: stall began when the media ran out
                played = self.level
                self.position += played
                self.level = 0.0
                self.phase = STALLED
                self.stall_events += 1
                self.stall_time += dt - played
        elif self.phase == STALLED:
            self.stall_time += dt

    def on_segment(self, now: float, duration: float) -> None:
        self.advance(now)
        self.level += duration
        if self.phase == STARTUP and self.level >= self.cfg.startup_s:
            self.phase = PLAYING
            self.started_at = now
        elif self.phase == STALLED and self.level >= self.cfg.resume_s:
            self.phase = PLAYING

    def finish_playback(self) -> float:
        """Seconds of media left to play out after the last download."""
        return self.level

    @property
    def startup_delay(self) -> float | None:
        if self.started_at is None:
            return None
        return self.started_at - self.session_start


def select_quality(buffer_level: float, current: int, estimate_bps: float | None,
                   bitrates: dict[int, int], cfg: ClientConfig) -> int:
    """The rule table above; depends only on buffer band, current rank, rate ratio."""
    top = max(bitrates)
    b = cfg.buffer
    if buffer_level < b.panic_s:
        return 1
    if buffer_level < b.safe_s:
        return max(current - 1, 1)
    if current < top and estimate_bps is not None \
            and estimate_bps >= bitrates[current + 1] * cfg.headroom:
        return current + 1
    return current


@dataclass(frozen=True)
class SegmentRecord:
    index: int
    rep: int
    dl_start_s: float
    dl_end_s: float


@dataclass
class SessionReport:
    client_id: int
    sequence: str
    start_s: float
    end_s: float = 0.0
    stalls: int = 0
    stall_time_s: float = 0.0
    startup_delay_s: float | None = None
    segments: list[SegmentRecord] = field(default_factory=list)
    finished: bool = False  # played the whole sequence
    aborted: bool = False  # gave up after repeated download failures
    _buf: object = field(default=None, repr=False, compare=False)

    @property
    def mean_rank(self) -> float:
        if not self.segments:
            return 0.0
        return sum(s.rep for s in self.segments) / len(self.segments)

    def harvest(self, now: float) -> None:
        """Bring a mid-flight session's accounting up to `now` (no-op once done).

        The buffer is reconciled lazily, so a session stopped at an experiment
        cutoff must replay its drain/stall bookkeeping up to the cutoff instant
        before its stall counters are read.
        """
        if self._buf is None:
            return
        self._buf.advance(now)
        _sync_report(self, self._buf, now)


@dataclass(frozen=True)
class SegmentFetch:
    payload: object
    requested_at: float
    transfer_start: float
    completed_at: float

    def rate_bps(self) -> float:
        dt = self.completed_at - self.transfer_start
        return self.payload.size * 8.0 / dt if dt > 0 else float("inf")


class InProcessEndpoint:
    """Request channel for simulation: calls the server directly, then shapes
    the response bytes over this client's own trace. Mirrors the live path:
    request latency, server think time, shaped transfer."""

    def __init__(self, loop, server, trace: BandwidthTrace, latency_s: float = DEFAULT_LATENCY_S):
        self.loop = loop
        self.server = server
        self.trace = trace
        self.latency_s = latency_s

    async def manifest(self, seq: str) -> dict:
        body = self.server.manifest_bytes(seq)
        await shaped_download(self.loop, self.trace, len(body), self.latency_s)
        return self.server.manifest(seq)

    async def segment(self, seq: str, rep: int, index: int) -> SegmentFetch:
        requested = self.loop.now()
        if self.latency_s > 0:
            await self.loop.sleep(self.latency_s)
        payload, _path = await self.server.segment(seq, rep, index)
        start = self.loop.now()
        end = self.trace.completion_time(start, payload.size)
        await self.loop.sleep(end - start)
        return SegmentFetch(payload, requested, start, self.loop.now())


async def run_session(loop, client_id: int, sequence: str, endpoint,
                      config: ClientConfig = ClientConfig(), register=None) -> SessionReport:
    """Stream one sequence to completion; returns the session's report.

    The report is progressively filled, and `register` (if given) receives it
    as soon as the session starts, so a caller that stops the experiment at a
    cutoff can still harvest sessions that were mid-flight.
    """
    report = SessionReport(client_id, sequence, start_s=loop.now())
    if register is not None:
        register(report)
    try:
        manifest = await endpoint.manifest(sequence)
        bitrates = {r["rank"]: r["bitrate_bps"] for r in manifest["representations"]}
        count = manifest["segment_count"]
        segdur = manifest["segment_duration_s"]
        buf = PlayerBuffer(config.buffer, loop.now())
        report._buf = buf
        estimate = None
        rank = 1  # first segment always probes at the lowest rank

        for index in range(count):
            buf.advance(loop.now())
            while buf.phase == PLAYING and buf.level >= config.buffer.target_s:
                await loop.sleep(buf.level - config.buffer.target_s + _EPS)
                buf.advance(loop.now())
            if index > 0:
                rank = select_quality(buf.level, rank, estimate, bitrates, config)
            fetch = await _fetch_with_retry(loop, endpoint, sequence, rank, index, config, report)
            if fetch is None:
                report.aborted = True
                break
            rate = fetch.rate_bps()
            estimate = rate if estimate is None \
                else config.ewma_alpha * rate + (1 - config.ewma_alpha) * estimate
            duration = min(segdur, manifest["duration_s"] - index * segdur)
            buf.on_segment(loop.now(), duration)
            report.segments.append(SegmentRecord(index, rank, fetch.requested_at, fetch.completed_at))
            _sync_report(report, buf, loop.now())

        if not report.aborted:
            buf.advance(loop.now())
            await loop.sleep(buf.finish_playback())
            buf.advance(loop.now())
            buf.phase = FINISHED
            report.finished = True
    finally:
        # reached only when the session actually ends; a session cut off at the
        # experiment horizon keeps its live buffer for harvest()
        if report._buf is not None:
            _sync_report(report, report._buf, loop.now())
            report._buf = None
    return report


def _sync_report(report: SessionReport, buf: PlayerBuffer, now: float) -> None:
    report.end_s = now
    report.stalls = buf.stall_events
    report.stall_time_s = buf.stall_time
    report.startup_delay_s = buf.startup_delay


async def _fetch_with_retry(loop, endpoint, sequence, rank, index, config, report):
    backoff = config.retry_backoff_s
    for attempt in range(config.retries + 1):
        try:
            return await endpoint.segment(sequence, rank, index)
        except OverloadError:
            if attempt == config.retries:
                break
            await loop.sleep(backoff)
            backoff *= 2
        except Exception:
            log.exception("client %d: download failed for %s/%d/%d",
                          report.client_id, sequence, rank, index)
            break
    return None
