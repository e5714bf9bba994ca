"""Aggregation of raw experiment records and versioned CSV export.

Three result families: response-time CDFs over request records (with the
fraction answered instantaneously, i.e. under a small epsilon), stall counts
per session, and the distribution of streamed segment qualities.

Every CSV starts with a comment line `# schema=<name>.<version> config=<hex>`
so downstream analysis can refuse inputs produced by a different schema or a
differently configured run. Writers are pure functions of the record sets;
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

from .client import SessionReport
from .server import RequestRecord
from .transcode import TranscodeJob

__all__ = [
    "INSTANT_EPSILON_S",
    "SCHEMAS",
    "fingerprint",
    "response_time_cdf",
    "stalls_per_session",
    "quality_proportions",
    "write_requests_csv",
    "write_sessions_csv",
    "write_segments_csv",
    "write_jobs_csv",
    "read_csv",
]

INSTANT_EPSILON_S = 0.010

SCHEMAS = {
    "requests": ("requests.v1",
                 ["request_id", "seq", "rep", "index", "arrival_s", "response_s", "path", "bytes"]),
    "sessions": ("sessions.v1",
                 ["client_id", "seq", "variant", "stalls", "stall_time_s", "startup_delay_s"]),
    "segments": ("segments.v1",
                 ["client_id", "seq", "index", "rep", "dl_start_s", "dl_end_s"]),
    "jobs": ("jobs.v1",
             ["seq", "rep", "index", "origin", "enqueued_s", "started_s", "finished_s", "outcome"]),
}


def fingerprint(config: dict) -> str:
    """Stable 12-hex digest of a JSON-serializable config."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


# -- aggregations ---------------------------------------------------------------


@dataclass(frozen=True)
class CdfSummary:
    points: list[tuple[float, float]]  # (latency_s, cumulative fraction), non-decreasing
    instant_fraction: float


def response_time_cdf(records: list[RequestRecord], epsilon_s: float = INSTANT_EPSILON_S) -> CdfSummary:
    if not records:
        raise ValueError("no request records")
    latencies = sorted(r.latency_s for r in records)
    n = len(latencies)
    points = []
    for i, lat in enumerate(latencies):
        if i + 1 < n and latencies[i + 1] == lat:
            continue  # keep the rightmost point per distinct latency
        points.append((lat, (i + 1) / n))
    instant = sum(1 for lat in latencies if lat < epsilon_s) / n
    return CdfSummary(points, instant)


@dataclass(frozen=True)
class StallSummary:
    counts: list[int]
    mean: float
    total_stall_time_s: float


def stalls_per_session(sessions: list[SessionReport]) -> StallSummary:
    if not sessions:
        raise ValueError("no sessions")
    counts = [s.stalls for s in sessions]
    return StallSummary(counts, sum(counts) / len(counts), sum(s.stall_time_s for s in sessions))


@dataclass(frozen=True)
class QualitySummary:
    fractions: dict[int, float]  # rank -> fraction of downloaded segments
    mean_rank: float
    segment_count: int


def quality_proportions(sessions: list[SessionReport], ladder_size: int,
                        sequence: str | None = None) -> QualitySummary:
    counts = {rank: 0 for rank in range(1, ladder_size + 1)}
    total = 0
    for session in sessions:
        if sequence is not None and session.sequence != sequence:
            continue
        for seg in session.segments:
            counts[seg.rep] += 1
            total += 1
    if total == 0:
        raise ValueError("no downloaded segments to aggregate")
    fractions = {rank: c / total for rank, c in counts.items()}
    mean_rank = sum(rank * frac for rank, frac in fractions.items())
    return QualitySummary(fractions, mean_rank, total)


# -- CSV export -------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _write(path, schema_key: str, config_hex: str, rows) -> None:
    name, columns = SCHEMAS[schema_key]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={name} config={config_hex}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_requests_csv(path, records: list[RequestRecord], config_hex: str) -> None:
    _write(path, "requests", config_hex,
           ((r.request_id, r.sequence, r.rep, r.index, r.arrival_s, r.response_s, r.path, r.nbytes)
            for r in records))


def write_sessions_csv(path, sessions: list[SessionReport], variant: str, config_hex: str) -> None:
    _write(path, "sessions", config_hex,
           ((s.client_id, s.sequence, variant, s.stalls, s.stall_time_s, s.startup_delay_s)
            for s in sessions))


def write_segments_csv(path, sessions: list[SessionReport], config_hex: str) -> None:
    _write(path, "segments", config_hex,
           ((s.client_id, s.sequence, seg.index, seg.rep, seg.dl_start_s, seg.dl_end_s)
            for s in sessions for seg in s.segments))


def write_jobs_csv(path, jobs: list[TranscodeJob], config_hex: str) -> None:
    _write(path, "jobs", config_hex,
           ((j.target.sequence, j.target.rep, j.target.index, j.origin,
             j.enqueued_at, j.started_at, j.finished_at, j.outcome)
            for j in jobs))


def read_csv(path, schema_key: str):
    """Read one of our CSVs back; returns (meta dict, list of row dicts).

    Refuses files whose schema tag does not match the current writer schema.
    """
    name, columns = SCHEMAS[schema_key]
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema header")
        fields = dict(part.split("=", 1) for part in first[2:].split())
        if fields.get("schema") != name:
            raise ValueError(f"{path}: schema {fields.get('schema')!r} != expected {name!r}")
        reader = csv.DictReader(fh)
        if reader.fieldnames != columns:
            raise ValueError(f"{path}: columns {reader.fieldnames} != expected {columns}")
        return fields, list(reader)
