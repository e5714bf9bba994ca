"""Per-client bandwidth shaping from time-stamped traces.

A trace is a step function: sample (t_i, bw_i) holds from t_i until the next
sample. The trace's period extends one median inter-sample gap past the last
timestamp (so the final sample holds for a typical interval); looping traces
repeat with that period, non-looping traces drop to zero bandwidth after it.

Download completion times are computed analytically by walking the constant
segments (whole periods are skipped in one step), so shaping is exact and
identical under virtual and wall clocks. Clients do not share capacity: each
session owns its trace, emulating one shaped link per player.
"""

from __future__ import annotations

import bisect
import csv
import math
import statistics
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_LATENCY_S",
    "BandwidthTrace",
    "DownloadTiming",
    "shaped_download",
    "load_trace",
    "write_trace",
    "synthetic_trace",
    "synthetic_trace_set",
]

DEFAULT_LATENCY_S = 0.020  # per-request latency floor; shaping itself is bandwidth-only


class BandwidthTrace:
    def __init__(self, samples: list[tuple[float, float]], looping: bool = True):
        if not samples:
            raise ValueError("trace needs at least one sample")
        ts = [t for t, _ in samples]
        if any(b - a <= 0 for a, b in zip(ts, ts[1:])):
            raise ValueError("trace timestamps must strictly increase")
        if ts[0] < 0:
            raise ValueError("trace timestamps must be >= 0")
        if any(bw < 0 for _, bw in samples):
            raise ValueError("bandwidth must be >= 0")
        self.looping = looping
        # Normalize so the first segment starts at 0 (first sample's value
        # backfills any leading gap).
        starts = list(ts)
        values = [float(bw) for _, bw in samples]
        if starts[0] > 0:
            starts[0] = 0.0
        gaps = [b - a for a, b in zip(ts, ts[1:])]
        tail = statistics.median(gaps) if gaps else 1.0
        self._starts = starts
        self._values = values
        self.period = ts[-1] + tail
        self._period_bits = sum(
            v * ((starts[i + 1] if i + 1 < len(starts) else self.period) - starts[i])
            for i, v in enumerate(values)
        )

    def bandwidth_at(self, t: float) -> float:
        """Instantaneous rate in bits/second."""
        if t < 0:
            raise ValueError("time must be >= 0")
        if self.looping:
            t = math.fmod(t, self.period)
        elif t >= self.period:
            return 0.0
        i = bisect.bisect_right(self._starts, t) - 1
        return self._values[max(i, 0)]

    def _drain_from(self, phase: float, bits: float) -> tuple[float, float]:
        """Consume bits walking from `phase` to the period end; (seconds spent, bits left)."""
        starts, values, period = self._starts, self._values, self.period
        i = max(bisect.bisect_right(starts, phase) - 1, 0)
        spent = 0.0
        pos = phase
        while i < len(starts):
            seg_end = starts[i + 1] if i + 1 < len(starts) else period
            width = seg_end - pos
            if width > 0:
                v = values[i]
                if v > 0:
                    if v * width >= bits:
                        return spent + bits / v, 0.0
                    bits -= v * width
                spent += width
                pos = seg_end
            i += 1
        return spent, bits

    def completion_time(self, start: float, nbytes: int) -> float:
        """Earliest t where the integral of bw over [start, t] reaches nbytes*8; inf if never."""
        bits = nbytes * 8.0
        if bits <= 0:
            return start
        if not self.looping:
            spent, left = self._drain_from(start, bits)
            return start + spent if left <= 0 else math.inf
        if self._period_bits <= 0:
            return math.inf
        t = start
        spent, left = self._drain_from(math.fmod(start, self.period), bits)
        t += spent
        if left <= 0:
            return t
        whole = math.floor(left / self._period_bits)
        t += whole * self.period
        left -= whole * self._period_bits
        if left <= 0:
            return t
        spent, left = self._drain_from(0.0, left)
        return t + spent


@dataclass(frozen=True)
class DownloadTiming:
    requested_at: float
    transfer_start: float  # after the latency floor
    completed_at: float

    def rate_bps(self, nbytes: int) -> float:
        """Measured rate over the shaped-transfer phase only (excludes the latency floor)."""
        dt = self.completed_at - self.transfer_start
        return nbytes * 8.0 / dt if dt > 0 else math.inf


async def shaped_download(loop, trace: BandwidthTrace, nbytes: int,
                          latency_s: float = DEFAULT_LATENCY_S) -> DownloadTiming:
    """Wait out the latency floor plus the shaped transfer of nbytes starting now."""
    requested = loop.now()
    if latency_s > 0:
        await loop.sleep(latency_s)
    start = loop.now()
    end = trace.completion_time(start, nbytes)
    await loop.sleep(end - start)  # sleep(inf) when the trace starves the transfer
    return DownloadTiming(requested, start, loop.now())


# -- trace file I/O (CSV: timestamp_s,bandwidth_kbps) ---------------------------


def load_trace(path, looping: bool = True) -> BandwidthTrace:
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                ts, kbps = float(row[0]), float(row[1])
            except ValueError:
                continue  # header row
            samples.append((ts, kbps * 1000.0))
    if not samples:
        raise ValueError(f"no samples in trace file {path}")
    return BandwidthTrace(samples, looping=looping)


def write_trace(path, trace: BandwidthTrace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp_s", "bandwidth_kbps"])
        for ts, bw in zip(trace._starts, trace._values):
            w.writerow([f"{ts:.3f}", f"{bw / 1000.0:.3f}"])


# -- synthetic traces ------------------------------------------------------------

# Mean-reverting log-normal rate process. Defaults give a median around the
# fixture ladder's top rung with excursions well above and below it, so
# sessions spread across the whole ladder instead of pinning to one rank.


def synthetic_trace(
    seed,
    duration_s: float = 600.0,
    step_s: float = 1.0,
    median_bps: float = 17e6,
    sigma: float = 0.35,
    theta_per_s: float = 0.08,
    floor_bps: float = 2e6,
    cap_bps: float = 400e6,
    looping: bool = True,
) -> BandwidthTrace:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    mu = math.log(median_bps)
    decay = math.exp(-theta_per_s * step_s)
    spread = sigma * math.sqrt(1.0 - decay * decay)
    x = mu + sigma * rng.standard_normal()
    samples = []
    t = 0.0
    while t < duration_s:
        bw = min(max(math.exp(x), floor_bps), cap_bps)
        samples.append((t, bw))
        x = mu + (x - mu) * decay + spread * rng.standard_normal()
        t += step_s
    return BandwidthTrace(samples, looping=looping)


def synthetic_trace_set(count: int, seed: int, **kwargs) -> list[BandwidthTrace]:
    return [synthetic_trace([seed, i], **kwargs) for i in range(count)]
