"""Experiment orchestration: build the world, run it, collect the records.

One experiment = one variant, N clients, K transcoding workers, a horizon
(default 600 s). Client i enters at the cumulative sum of i exponential
inter-arrival draws (rate 0.1/s by default, avoiding synchronized launches),
streams a uniformly drawn sequence, and starts a fresh session whenever one
finishes, keeping load stationary until the horizon cuts everything off.

Determinism: every random stream is derived from (seed, purpose tag, entity
id), so in virtual-clock mode identical configs produce identical results,
and two variants under the same seed see identical arrival times, traces,
and per-client sequence picks. The k-th session of client c picks the same
sequence in every variant, which is what makes cross-variant comparisons
paired rather than merely distributionally equal.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .backend import Backend, BackendPolicy, VARIANTS
from .cache import DEFAULT_CAPACITY_BYTES
from .client import BufferConfig, ClientConfig, InProcessEndpoint, SessionReport, run_session
from .content import (
    Catalog,
    CatalogConfig,
    ConfigError,
    FIXTURE_LADDER,
    FIXTURE_SEQUENCES,
    SequenceConfig,
)
from .metrics import (
    fingerprint,
    quality_proportions,
    response_time_cdf,
    stalls_per_session,
    write_jobs_csv,
    write_requests_csv,
    write_segments_csv,
    write_sessions_csv,
)
from .netem import BandwidthTrace, load_trace, synthetic_trace
from .server import MediaServer
from .sim import VirtualLoop, WallLoop
from .transcode import LatencyModel, TranscodeJob

__all__ = ["NetemConfig", "ExperimentConfig", "ExperimentResult", "run_experiment", "scenario_matrix"]

log = logging.getLogger(__name__)

# stream tags for seed derivation
_ARRIVALS, _TRACES, _PICKS = 1, 2, 3


@dataclass(frozen=True)
class NetemConfig:
    median_bps: float = 17e6
    sigma: float = 0.35
    theta_per_s: float = 0.08
    floor_bps: float = 2e6
    cap_bps: float = 400e6
    step_s: float = 1.0
    trace_duration_s: float = 600.0
    latency_s: float = 0.020
    trace_dir: str | None = None


@dataclass
class ExperimentConfig:
    variant: str = "TC"
    clients: int = 4
    workers: int = 4
    horizon_s: float = 600.0
    arrival_rate_per_s: float = 0.1
    seed: int = 1
    clock: str = "virtual"  # virtual | wall

    # catalog
    segment_duration_s: float = 4.0
    sequence_duration_s: float = 80.0
    size_jitter: float = 0.05
    ladder: list[tuple[int, int]] = field(default_factory=lambda: list(FIXTURE_LADDER))
    sequences: list[dict] | None = None  # [{id, duration_s?, segment_duration_s?}]

    # backend
    cache_capacity_bytes: int = DEFAULT_CAPACITY_BYTES
    queue_bound: int = 0
    demand_priority: bool = False

    # transcoder latency model
    rho: float = 0.5
    per_rank_rho: dict[int, float] | None = None
    noise_rel_std: float = 0.05

    netem: NetemConfig = field(default_factory=NetemConfig)
    client: ClientConfig = field(default_factory=ClientConfig)

    def __post_init__(self):
        if self.clients < 1:
            raise ConfigError("need at least one client")
        if self.horizon_s <= 0:
            raise ConfigError("horizon must be positive")
        if self.arrival_rate_per_s <= 0:
            raise ConfigError("arrival rate must be positive")
        if self.clock not in ("virtual", "wall"):
            raise ConfigError(f"unknown clock mode {self.clock!r}")
        BackendPolicy(self.variant)  # validates the variant string

    # -- construction from the external config document ------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        exp = d.get("experiment", {})
        cat = d.get("catalog", {})
        be = d.get("backend", {})
        lm = d.get("latency_model", {})
        ne = d.get("netem", {})
        cl = d.get("client", {})
        buffer_keys = {"target_s", "safe_s", "panic_s", "resume_s", "startup_s"}
        buf = BufferConfig(**{k: v for k, v in cl.items() if k in buffer_keys})
        client = ClientConfig(
            buffer=buf,
            ewma_alpha=cl.get("ewma_alpha", 0.3),
            headroom=cl.get("headroom", 1.2),
            retries=cl.get("retries", 3),
            retry_backoff_s=cl.get("retry_backoff_s", 0.5),
            latency_s=ne.get("latency_s", 0.020),
        )
        per_rank = lm.get("per_rank_rho")
        return cls(
            variant=exp.get("variant", "TC"),
            clients=int(exp.get("clients", 4)),
            workers=int(exp.get("workers", 4)),
            horizon_s=float(exp.get("horizon_s", 600.0)),
            arrival_rate_per_s=float(exp.get("arrival_rate_per_s", 0.1)),
            seed=int(exp.get("seed", 1)),
            clock=exp.get("clock", "virtual"),
            segment_duration_s=float(cat.get("segment_duration_s", 4.0)),
            sequence_duration_s=float(cat.get("duration_s", 80.0)),
            size_jitter=float(cat.get("size_jitter", 0.05)),
            ladder=[(int(e["rank"]), int(e["bitrate_bps"])) for e in cat["ladder"]]
            if "ladder" in cat else list(FIXTURE_LADDER),
            sequences=cat.get("sequences"),
            cache_capacity_bytes=int(be.get("cache_capacity_bytes", DEFAULT_CAPACITY_BYTES)),
            queue_bound=int(be.get("queue_bound", 0)),
            demand_priority=bool(be.get("demand_priority", False)),
            rho=float(lm.get("rho", 0.5)),
            per_rank_rho={int(k): float(v) for k, v in per_rank.items()} if per_rank else None,
            noise_rel_std=float(lm.get("noise_rel_std", 0.05)),
            netem=NetemConfig(**{k: v for k, v in ne.items() if k in
                                 {f.name for f in dataclasses.fields(NetemConfig)}}),
            client=client,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        """Sectioned document form; from_dict(to_dict()) reconstructs the config."""
        client = {
            "target_s": self.client.buffer.target_s,
            "safe_s": self.client.buffer.safe_s,
            "panic_s": self.client.buffer.panic_s,
            "resume_s": self.client.buffer.resume_s,
            "startup_s": self.client.buffer.startup_s,
            "ewma_alpha": self.client.ewma_alpha,
            "headroom": self.client.headroom,
            "retries": self.client.retries,
            "retry_backoff_s": self.client.retry_backoff_s,
        }
        catalog = {
            "segment_duration_s": self.segment_duration_s,
            "duration_s": self.sequence_duration_s,
            "size_jitter": self.size_jitter,
            "ladder": [{"rank": r, "bitrate_bps": b} for r, b in self.ladder],
        }
        if self.sequences is not None:
            catalog["sequences"] = self.sequences
        latency_model = {"rho": self.rho, "noise_rel_std": self.noise_rel_std}
        if self.per_rank_rho is not None:
            latency_model["per_rank_rho"] = {str(k): v for k, v in self.per_rank_rho.items()}
        return {
            "experiment": {
                "variant": self.variant,
                "clients": self.clients,
                "workers": self.workers,
                "horizon_s": self.horizon_s,
                "arrival_rate_per_s": self.arrival_rate_per_s,
                "seed": self.seed,
                "clock": self.clock,
            },
            "catalog": catalog,
            "backend": {
                "cache_capacity_bytes": self.cache_capacity_bytes,
                "queue_bound": self.queue_bound,
                "demand_priority": self.demand_priority,
            },
            "latency_model": latency_model,
            "netem": dataclasses.asdict(self.netem),
            "client": client,
        }

    # -- derived pieces -----------------------------------------------------------

    def policy(self) -> BackendPolicy:
        return BackendPolicy(self.variant, self.cache_capacity_bytes, self.workers,
                             self.queue_bound, self.demand_priority)

    def catalog_config(self) -> CatalogConfig:
        top = max(rank for rank, _ in self.ladder)
        entries = self.sequences or [{"id": sid} for sid in FIXTURE_SEQUENCES]
        seqs = [
            SequenceConfig(
                e["id"],
                float(e.get("duration_s", self.sequence_duration_s)),
                float(e.get("segment_duration_s", self.segment_duration_s)),
            )
            for e in entries
        ]
        return CatalogConfig(
            sequences=seqs,
            ladder=list(self.ladder),
            stored_ranks=self.policy().stored_ranks(top),
            seed=self.seed,
            size_jitter=self.size_jitter,
        )

    def latency_model(self) -> LatencyModel:
        ranks = [rank for rank, _ in self.ladder]
        rho_map = self.per_rank_rho or {r: self.rho for r in ranks}
        return LatencyModel(rho_map, self.noise_rel_std, seed=self.seed)

    def trace_for(self, client_id: int) -> BandwidthTrace:
        ne = self.netem
        if ne.trace_dir:
            files = sorted(
                os.path.join(ne.trace_dir, f)
                for f in os.listdir(ne.trace_dir)
                if f.endswith(".csv")
            )
            if not files:
                raise ConfigError(f"no trace CSVs in {ne.trace_dir}")
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, _TRACES])))
            order = rng.permutation(len(files))
            return load_trace(files[order[client_id % len(files)]])
        return synthetic_trace(
            [self.seed, _TRACES, client_id],
            duration_s=ne.trace_duration_s,
            step_s=ne.step_s,
            median_bps=ne.median_bps,
            sigma=ne.sigma,
            theta_per_s=ne.theta_per_s,
            floor_bps=ne.floor_bps,
            cap_bps=ne.cap_bps,
        )

    def arrival_offsets(self) -> list[float]:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, _ARRIVALS])))
        draws = rng.exponential(1.0 / self.arrival_rate_per_s, size=self.clients)
        return list(np.cumsum(draws))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    fingerprint: str
    requests: list
    sessions: list[SessionReport]
    jobs: list[TranscodeJob]
    backend_stats: dict

    def summary(self) -> dict:
        ladder_size = max(rank for rank, _ in self.config.ladder)
        out = {
            "fingerprint": self.fingerprint,
            "variant": self.config.variant,
            "clients": self.config.clients,
            "workers": self.config.workers,
            "segment_duration_s": self.config.segment_duration_s,
            "requests": len(self.requests),
            "sessions": len(self.sessions),
            "jobs": len(self.jobs),
            "backend": self.backend_stats,
        }
        if self.requests:
            cdf = response_time_cdf(self.requests)
            out["instant_fraction"] = cdf.instant_fraction
            lat = sorted(r.latency_s for r in self.requests)
            out["latency_p50_s"] = lat[len(lat) // 2]
            out["latency_p99_s"] = lat[min(len(lat) - 1, int(0.99 * len(lat)))]
        if self.sessions:
            stalls = stalls_per_session(self.sessions)
            out["stalls_mean"] = stalls.mean
            out["stall_time_total_s"] = stalls.total_stall_time_s
            try:
                quality = quality_proportions(self.sessions, ladder_size)
                out["quality_fractions"] = {str(k): v for k, v in quality.fractions.items()}
                out["mean_rank"] = quality.mean_rank
            except ValueError:
                pass
        return out

    def write(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        write_requests_csv(os.path.join(outdir, "requests.csv"), self.requests, self.fingerprint)
        write_sessions_csv(os.path.join(outdir, "sessions.csv"), self.sessions,
                           self.config.variant, self.fingerprint)
        write_segments_csv(os.path.join(outdir, "segments.csv"), self.sessions, self.fingerprint)
        write_jobs_csv(os.path.join(outdir, "jobs.csv"), self.jobs, self.fingerprint)
        with open(os.path.join(outdir, "config.json"), "w", encoding="utf-8") as fh:
            json.dump({"fingerprint": self.fingerprint, **self.config.to_dict()},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    loop = VirtualLoop() if config.clock == "virtual" else WallLoop()
    catalog = Catalog(config.catalog_config())
    backend = Backend(loop, catalog, config.policy(), config.latency_model())
    server = MediaServer(loop, catalog, backend)
    reports: list[SessionReport] = []
    offsets = config.arrival_offsets()
    sequence_ids = catalog.sequence_ids

    async def client_proc(cid: int):
        await loop.sleep(offsets[cid])
        trace = config.trace_for(cid)
        endpoint = InProcessEndpoint(loop, server, trace, config.client.latency_s)
        picks = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, _PICKS, cid])))
        while loop.now() < config.horizon_s:
            seq = sequence_ids[int(picks.integers(len(sequence_ids)))]
            try:
                await run_session(loop, cid, seq, endpoint, config.client,
                                  register=reports.append)
            except Exception:
                log.exception("client %d: session failed", cid)
                await loop.sleep(1.0)

    for cid in range(config.clients):
        loop.spawn(client_proc(cid), name=f"client-{cid}")

    if config.clock == "virtual":
        loop.run_until(config.horizon_s)
    else:
        loop.run_until_complete(loop.sleep(config.horizon_s))
    horizon = loop.now()
    for report in reports:
        report.harvest(horizon)
    loop.raise_unretrieved()

    cfg_dict = config.to_dict()
    return ExperimentResult(
        config=config,
        fingerprint=fingerprint(cfg_dict),
        requests=list(server.records),
        sessions=reports,
        jobs=list(backend.jobs),
        backend_stats=backend.stats(),
    )


def scenario_matrix(base: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """The full evaluation grid: {4,24,40} clients x {1,2} worker nodes (4 workers
    each) x {2,4} s segments x all six variants."""
    out = []
    for clients in (4, 24, 40):
        for nodes in (1, 2):
            for segdur in (2.0, 4.0):
                for variant in VARIANTS:
                    cfg = dataclasses.replace(
                        base,
                        variant=variant,
                        clients=clients,
                        workers=4 * nodes,
                        segment_duration_s=segdur,
                    )
                    name = f"c{clients:02d}_n{nodes}_t{int(segdur)}_{variant}"
                    out.append((name, cfg))
    return out
