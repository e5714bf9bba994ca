"""End-to-end acceptance checks, one test per numbered criterion.

Each test prints a single `criterion NN [PASS|FAIL]` line with the measured
values (run pytest with -s to see them on success). Experiment runs are
memoized across criteria so shared configurations execute once.
"""

import random
import time
from collections import OrderedDict

import numpy as np
from scipy import stats as scipy_stats

from otfstream.backend import Backend, BackendPolicy
from otfstream.cache import SegmentCache
from otfstream.content import Catalog, SegmentDescriptor, default_config
from otfstream.metrics import quality_proportions, stalls_per_session
from otfstream.netem import synthetic_trace
from otfstream.orchestrator import ExperimentConfig, NetemConfig, run_experiment
from otfstream.server import MediaServer
from otfstream.sim import VirtualLoop
from otfstream.transcode import LatencyModel

SEEDS = (1, 2, 3, 4, 5)
_runs: dict = {}


def run(variant: str, clients: int, seed: int, workers: int = 4):
    key = (variant, clients, seed, workers)
    if key not in _runs:
        _runs[key] = run_experiment(ExperimentConfig(
            variant=variant, clients=clients, workers=workers, seed=seed,
            segment_duration_s=2.0))
    return _runs[key]


def mean_stalls(variant: str, clients: int, workers: int = 4) -> float:
    vals = [stalls_per_session(run(variant, clients, s, workers).sessions).mean
            for s in SEEDS]
    return sum(vals) / len(vals)


def report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {detail}"
    print(line)
    assert ok, line


def test_criterion_01_instant_fraction_band():
    t0 = time.perf_counter()
    res = run("T", 4, seed=1)
    elapsed = time.perf_counter() - t0
    frac = res.summary()["instant_fraction"]
    ok = 0.30 <= frac <= 0.55 and elapsed < 30.0
    report(1, ok, f"instant fraction {frac:.3f} in [0.30, 0.55], "
                  f"runtime {elapsed:.1f}s < 30s")


def test_criterion_02_variant_ordering_at_high_load():
    t0 = time.perf_counter()
    means = {v: mean_stalls(v, 24) for v in ("T", "TC", "TCF", "TCPF")}
    elapsed = time.perf_counter() - t0
    ok = (means["T"] >= means["TC"] >= means["TCF"]
          and means["T"] >= means["TCPF"]
          and means["TCPF"] <= 0.5 * means["T"]
          and elapsed < 300.0)
    report(2, ok, "stalls/session T={T:.2f} >= TC={TC:.2f} >= TCF={TCF:.2f}, "
                  "TCPF={TCPF:.2f} <= 0.5*T, runtime {rt:.0f}s < 300s".format(
                      rt=elapsed, **means))


def test_criterion_03_speculation_crossover():
    low_tc, low_tcp = mean_stalls("TC", 4), mean_stalls("TCP", 4)
    high_tc, high_tcp = mean_stalls("TC", 40), mean_stalls("TCP", 40)
    ok = low_tcp <= low_tc and high_tcp >= high_tc
    report(3, ok, f"4 clients: TCP {low_tcp:.3f} <= TC {low_tc:.3f}; "
                  f"40 clients: TCP {high_tcp:.2f} >= TC {high_tc:.2f}")


def test_criterion_04_baseline_purity():
    cfg = ExperimentConfig(variant="B", clients=4, seed=1, segment_duration_s=2.0,
                           netem=NetemConfig(median_bps=400e6, sigma=0.0))
    res = run_experiment(cfg)
    stall_total = sum(s.stalls for s in res.sessions)
    ok = bool(res.requests) and len(res.jobs) == 0 and stall_total == 0
    report(4, ok, f"baseline: {len(res.jobs)} transcode jobs, {stall_total} stalls "
                  f"across {len(res.sessions)} sessions under flat 400 Mbps links")


def test_criterion_05_quality_distribution_fidelity():
    worst = 0.0
    for seed in SEEDS:
        base = quality_proportions(run("B", 4, seed).sessions, 5).fractions
        full = quality_proportions(run("TCPF", 4, seed).sessions, 5).fractions
        tv = 0.5 * sum(abs(base[r] - full[r]) for r in range(1, 6))
        worst = max(worst, tv)
    ok = worst <= 0.15
    report(5, ok, f"max per-seed total variation B vs TCPF {worst:.3f} <= 0.15")


def test_criterion_06_single_flight_under_contention():
    loop = VirtualLoop()
    catalog = Catalog(default_config(segment_duration_s=2.0, duration_s=8.0))
    backend = Backend(loop, catalog, BackendPolicy("T", workers=4),
                      LatencyModel.fixture(catalog.ladder.ranks))
    media = MediaServer(loop, catalog, backend)
    bodies = []

    async def one_request():
        payload, _ = await media.segment("loot", 3, 0)
        bodies.append(payload.to_bytes())

    for _ in range(64):
        loop.spawn(one_request())
    loop.run_until(30.0)
    ok = len(backend.jobs) == 1 and len(bodies) == 64 and len(set(bodies)) == 1
    report(6, ok, f"64 concurrent identical requests -> {len(backend.jobs)} job, "
                  f"{len(bodies)} responses, {len(set(bodies))} distinct body")


def test_criterion_07_lru_matches_reference_model():
    class Blob:
        def __init__(self, size: int):
            self.size = size

    rng = random.Random(2024)
    capacity = 50_000
    cache = SegmentCache(capacity)
    model: OrderedDict[SegmentDescriptor, int] = OrderedDict()
    model_bytes = 0
    keys = [SegmentDescriptor(f"s{i % 12}", 1 + i % 5, i // 60, 2.0, 0)
            for i in range(180)]
    mismatches = 0

    for _ in range(10_000):
        key = rng.choice(keys)
        if rng.random() < 0.5:
            hit = cache.get(key) is not None
            model_hit = key in model
            if model_hit:
                model.move_to_end(key)
            mismatches += hit != model_hit
        else:
            size = rng.randint(1, capacity // 3) if rng.random() < 0.98 \
                else capacity + rng.randint(1, 1000)
            got = cache.put(key, Blob(size))
            if size > capacity:
                expect = None
            else:
                if key in model:
                    model_bytes -= model.pop(key)
                expect = []
                while model_bytes + size > capacity:
                    victim, vsize = model.popitem(last=False)
                    model_bytes -= vsize
                    expect.append(victim)
                model[key] = size
                model_bytes += size
            mismatches += got != expect
        assert cache.current_bytes <= capacity, "capacity exceeded"
        assert cache.current_bytes == model_bytes

    ok = mismatches == 0
    stats = cache.stats()
    report(7, ok, f"10000 randomized ops, {mismatches} divergences from the "
                  f"reference model (hits {stats['hits']}, misses {stats['misses']}, "
                  f"evictions {stats['evictions']}), capacity never exceeded")


def test_criterion_08_equal_seeds_byte_identical(tmp_path):
    cfg = ExperimentConfig(variant="TCPF", clients=8, workers=4, seed=9,
                           segment_duration_s=2.0)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    run_experiment(cfg).write(out_a)
    run_experiment(cfg).write(out_b)
    same = {name: (out_a / name).read_bytes() == (out_b / name).read_bytes()
            for name in ("requests.csv", "sessions.csv", "jobs.csv")}
    ok = all(same.values())
    report(8, ok, "paired equal-seed runs byte-identical: " +
                  ", ".join(f"{n} {'yes' if v else 'NO'}" for n, v in same.items()))


def test_criterion_09_completion_time_integration_oracle():
    def integrate(trace, start_ms, nbytes, step=0.001):
        # integer-ms grid: (start_ms + k) / 1000 lands exactly on the trace's
        # whole-second rate boundaries, so no step straddles a rate change
        need = nbytes * 8.0
        acc, k = 0.0, 0
        while acc < need:
            acc += trace.bandwidth_at((start_ms + k) / 1000.0) * step
            k += 1
        return (start_ms + k) / 1000.0

    rng = random.Random(99)
    worst = 0.0
    for case in range(1000):
        trace = synthetic_trace(seed=case, duration_s=30.0,
                                median_bps=rng.uniform(5e6, 40e6),
                                sigma=rng.uniform(0.0, 0.6))
        start_ms = rng.randrange(60_000)
        nbytes = rng.randint(10_000, 400_000)
        exact = trace.completion_time(start_ms / 1000.0, nbytes)
        worst = max(worst, abs(integrate(trace, start_ms, nbytes) - exact))
    ok = worst <= 1e-3 + 1e-9
    report(9, ok, f"worst |closed form - 1ms integration| = {worst * 1000:.4f} ms "
                  f"<= 1 ms over 1000 random (trace, size) cases")


def test_criterion_10_arrival_process_ks():
    offsets = ExperimentConfig(clients=1001, seed=3).arrival_offsets()
    gaps = np.diff(np.asarray(offsets))
    result = scipy_stats.kstest(gaps, "expon", args=(0, 1 / 0.1))
    ok = len(gaps) == 1000 and result.pvalue > 0.01
    report(10, ok, f"KS vs Exp(rate 0.1): p = {result.pvalue:.3f} > 0.01 "
                   f"on {len(gaps)} inter-arrival gaps")


def test_criterion_11_worker_count_sensitivity():
    parts, ok = [], True
    for variant in ("T", "TC", "TCP", "TCF", "TCPF"):
        k4 = mean_stalls(variant, 24, workers=4)
        k8 = mean_stalls(variant, 24, workers=8)
        ok = ok and k8 <= k4
        parts.append(f"{variant} {k8:.2f}<={k4:.2f}")
    report(11, ok, "mean stalls K=8 vs K=4 at 24 clients: " + ", ".join(parts))
