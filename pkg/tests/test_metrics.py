"""Aggregation math and the versioned CSV layer."""

import random

import pytest

from otfstream.client import SegmentRecord, SessionReport
from otfstream.metrics import (
    INSTANT_EPSILON_S,
    fingerprint,
    quality_proportions,
    read_csv,
    response_time_cdf,
    stalls_per_session,
    write_jobs_csv,
    write_requests_csv,
    write_sessions_csv,
)
from otfstream.server import RequestRecord


def req(i, arrival, response, path="storage", rep=5, nbytes=1000):
    return RequestRecord(i, "loot", rep, i, arrival, response, path, nbytes)


def session(cid, stalls=0, stall_time=0.0, ranks=()):
    rep = SessionReport(cid, "loot", start_s=0.0, stalls=stalls, stall_time_s=stall_time)
    for i, r in enumerate(ranks):
        rep.segments.append(SegmentRecord(i, r, float(i), float(i) + 0.5))
    return rep


# -- fingerprint -------------------------------------------------------------------


def test_fingerprint_is_stable_and_key_order_free():
    a = fingerprint({"x": 1, "y": [1, 2]})
    b = fingerprint({"y": [1, 2], "x": 1})
    assert a == b
    assert len(a) == 12
    assert int(a, 16) >= 0


def test_fingerprint_changes_with_config():
    assert fingerprint({"x": 1}) != fingerprint({"x": 2})


# -- response time CDF ---------------------------------------------------------------


def test_cdf_hand_computed_points():
    records = [
        req(0, 0.0, 0.0),
        req(1, 0.0, 0.005),
        req(2, 0.0, 0.02),
        req(3, 0.0, 0.02),
        req(4, 0.0, 1.0),
    ]
    cdf = response_time_cdf(records)
    assert cdf.points == [(0.0, 0.2), (0.005, 0.4), (0.02, 0.8), (1.0, 1.0)]
    assert cdf.instant_fraction == pytest.approx(0.4)


def test_cdf_instant_uses_strict_epsilon():
    records = [req(0, 0.0, INSTANT_EPSILON_S), req(1, 0.0, 0.0)]
    cdf = response_time_cdf(records)
    assert cdf.instant_fraction == pytest.approx(0.5)


def test_cdf_monotone_and_ends_at_one():
    rnd = random.Random(7)
    records = [req(i, 0.0, rnd.expovariate(2.0)) for i in range(500)]
    cdf = response_time_cdf(records)
    lats = [p[0] for p in cdf.points]
    fracs = [p[1] for p in cdf.points]
    assert lats == sorted(lats) and len(set(lats)) == len(lats)
    assert all(a < b for a, b in zip(fracs, fracs[1:]))
    assert fracs[-1] == pytest.approx(1.0)


def test_cdf_requires_records():
    with pytest.raises(ValueError):
        response_time_cdf([])


# -- stalls and quality ---------------------------------------------------------------


def test_stalls_per_session_hand_values():
    summary = stalls_per_session([session(0, stalls=2, stall_time=3.5),
                                  session(1, stalls=0),
                                  session(2, stalls=4, stall_time=1.0)])
    assert summary.counts == [2, 0, 4]
    assert summary.mean == pytest.approx(2.0)
    assert summary.total_stall_time_s == pytest.approx(4.5)


def test_quality_proportions_hand_values():
    sessions = [session(0, ranks=(1, 1, 2)), session(1, ranks=(3,))]
    q = quality_proportions(sessions, ladder_size=3)
    assert q.segment_count == 4
    assert q.fractions == {1: 0.5, 2: 0.25, 3: 0.25}
    assert q.mean_rank == pytest.approx(1.75)
    assert sum(q.fractions.values()) == pytest.approx(1.0)


def test_quality_proportions_sequence_filter():
    keep = session(0, ranks=(2, 2))
    drop = session(1, ranks=(5, 5, 5))
    drop.sequence = "soldier"
    q = quality_proportions([keep, drop], ladder_size=5, sequence="loot")
    assert q.segment_count == 2
    assert q.fractions[2] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        quality_proportions([keep], ladder_size=5, sequence="redandblack")


# -- CSV layer -------------------------------------------------------------------------


def test_requests_csv_roundtrip_and_header(tmp_path):
    path = tmp_path / "requests.csv"
    records = [req(0, 0.0, 0.25), req(1, 1.0, 1.031251)]
    write_requests_csv(path, records, "abcdef012345")
    meta, rows = read_csv(path, "requests")
    assert meta == {"schema": "requests.v1", "config": "abcdef012345"}
    assert [r["request_id"] for r in rows] == ["0", "1"]
    assert rows[0]["response_s"] == "0.250000"  # six-decimal float formatting
    assert rows[1]["response_s"] == "1.031251"
    first = path.read_text().splitlines()[0]
    assert first == "# schema=requests.v1 config=abcdef012345"


def test_sessions_csv_carries_variant_and_none_blank(tmp_path):
    path = tmp_path / "sessions.csv"
    rep = session(3, stalls=1, stall_time=0.5)
    assert rep.startup_delay_s is None
    write_sessions_csv(path, [rep], "TC", "0" * 12)
    _, rows = read_csv(path, "sessions")
    assert rows[0]["variant"] == "TC"
    assert rows[0]["startup_delay_s"] == ""


def test_writers_are_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    records = [req(i, i * 0.1, i * 0.1 + 0.05) for i in range(20)]
    write_requests_csv(a, records, "deadbeef0000")
    write_requests_csv(b, records, "deadbeef0000")
    assert a.read_bytes() == b.read_bytes()


def test_read_csv_refuses_wrong_schema(tmp_path):
    path = tmp_path / "jobs.csv"
    write_jobs_csv(path, [], "0" * 12)
    with pytest.raises(ValueError, match="schema"):
        read_csv(path, "requests")


def test_read_csv_refuses_missing_header(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("request_id,seq\n0,loot\n")
    with pytest.raises(ValueError, match="missing schema header"):
        read_csv(path, "requests")


def test_read_csv_refuses_column_mismatch(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("# schema=requests.v1 config=000000000000\nrequest_id,seq\n0,loot\n")
    with pytest.raises(ValueError, match="columns"):
        read_csv(path, "requests")
