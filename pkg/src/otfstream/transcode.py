"""Transcoder abstraction with a latency-model mock implementation.

The mock converts a stored top-rank segment into a target-rank segment after
a modeled service time rho(rank) x T x (1 + eps), eps ~ N(0, noise). Service
time elapses on the experiment clock, so simulated and live runs share one
code path. Each worker slot draws noise from its own seed-derived generator,
keeping runs deterministic regardless of how jobs interleave across workers.

A real encoder can be substituted by implementing the same coroutine shape;
the system dynamics under test (queueing, caching, speculation) do not depend
on codec internals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .content import Catalog, ConfigError, SegmentDescriptor, SegmentPayload

__all__ = [
    "DEMAND",
    "SPECULATIVE",
    "LatencyModel",
    "ServiceSampler",
    "TranscodeJob",
    "RedundantJobError",
    "run_transcode",
]

DEMAND = "demand"
SPECULATIVE = "speculative"


class RedundantJobError(ValueError):
    """Job targets a rank that is already stored at the origin."""


@dataclass
class LatencyModel:
    per_rank_rho: dict[int, float]  # target rank -> service time / segment duration
    noise_rel_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.per_rank_rho:
            raise ConfigError("latency model needs at least one rank entry")
        if any(rho <= 0 for rho in self.per_rank_rho.values()):
            raise ConfigError("rho must be positive for every rank")
        if self.noise_rel_std < 0:
            raise ConfigError("noise_rel_std must be >= 0")

    @classmethod
    def fixture(cls, ranks, rho: float = 0.5, noise_rel_std: float = 0.05, seed: int = 0):
        """Uniform-rho fixture; keeps service time below playback duration (rho < 1)."""
        return cls({r: rho for r in ranks}, noise_rel_std, seed)

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyModel":
        return cls(
            per_rank_rho={int(k): float(v) for k, v in d["per_rank_rho"].items()},
            noise_rel_std=float(d.get("noise_rel_std", 0.05)),
            seed=int(d.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "per_rank_rho": {str(k): v for k, v in self.per_rank_rho.items()},
            "noise_rel_std": self.noise_rel_std,
            "seed": self.seed,
        }

    def rho(self, rank: int) -> float:
        try:
            return self.per_rank_rho[rank]
        except KeyError:
            raise ConfigError(f"latency model has no rho for rank {rank}") from None

    def sampler(self, worker_id: int) -> "ServiceSampler":
        return ServiceSampler(self, worker_id)


class ServiceSampler:
    """Per-worker service-time source with a seed derived from the worker id."""

    __slots__ = ("_model", "_rng")

    def __init__(self, model: LatencyModel, worker_id: int):
        self._model = model
        self._rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([model.seed, worker_id]))
        )

    def service_time(self, target: SegmentDescriptor) -> float:
        rho = self._model.rho(target.rep)
        noise = self._model.noise_rel_std
        eps = self._rng.normal(0.0, noise) if noise > 0 else 0.0
        return max(rho * target.duration * (1.0 + eps), 1e-9)


@dataclass
class TranscodeJob:
    target: SegmentDescriptor
    source_rank: int
    origin: str  # DEMAND or SPECULATIVE
    enqueued_at: float
    started_at: float | None = None
    finished_at: float | None = None
    outcome: str = "pending"  # completed | dropped | failed

    def validate(self, catalog: Catalog) -> None:
        if catalog.ladder.is_stored(self.target.rep):
            raise RedundantJobError(f"rank {self.target.rep} is stored; nothing to transcode")
        if not catalog.ladder.is_stored(self.source_rank):
            raise RuntimeError(f"source rank {self.source_rank} is not stored at origin")
        if self.source_rank < self.target.rep:
            raise RuntimeError(
                f"cannot transcode rank {self.target.rep} from lower-rank source {self.source_rank}"
            )


async def run_transcode(loop, job: TranscodeJob, catalog: Catalog,
                        sampler: ServiceSampler) -> SegmentPayload:
    """Occupy the calling worker slot for the service time, then yield the payload."""
    job.validate(catalog)
    job.started_at = loop.now()
    await loop.sleep(sampler.service_time(job.target))
    job.finished_at = loop.now()
    job.outcome = "completed"
    return catalog.payload(job.target)
