"""Media catalog: sequences, bitrate ladder, segmentation, synthetic payloads.

Segments are opaque pseudorandom byte strings standing in for point cloud
bitstreams. Generation is deterministic: payload bytes and the jittered
segment size are both derived from (catalog seed, sequence id, rank, index),
so two catalogs built from the same config are byte-identical, and a
transcoded segment is byte-identical to what the origin would have stored.

Payloads are lazy handles. Size is known without materializing bytes, which
keeps virtual-time experiments from allocating multi-megabyte buffers per
request; ``to_bytes()`` is only called by the live HTTP path and by tests.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "NotFoundError",
    "SequenceConfig",
    "CatalogConfig",
    "BitrateLadder",
    "SegmentDescriptor",
    "SegmentPayload",
    "Catalog",
    "default_config",
]

URL_TEMPLATE = "/content/{seq}/{rep}/{index}"


class ConfigError(ValueError):
    pass


class NotFoundError(KeyError):
    """Unknown sequence, rank, or out-of-range segment index."""


@dataclass(frozen=True)
class SequenceConfig:
    id: str
    duration_s: float
    segment_duration_s: float


@dataclass
class CatalogConfig:
    sequences: list[SequenceConfig]
    ladder: list[tuple[int, int]]  # (rank, bitrate_bps), rank 1 = lowest rate
    stored_ranks: list[int]
    seed: int = 0
    size_jitter: float = 0.05

    @classmethod
    def from_dict(cls, d: dict) -> "CatalogConfig":
        try:
            sequences = [
                SequenceConfig(s["id"], float(s["duration_s"]), float(s["segment_duration_s"]))
                for s in d["sequences"]
            ]
            ladder = [(int(e["rank"]), int(e["bitrate_bps"])) for e in d["ladder"]]
        except (KeyError, TypeError) as err:
            raise ConfigError(f"malformed catalog config: {err}") from err
        return cls(
            sequences=sequences,
            ladder=ladder,
            stored_ranks=[int(r) for r in d.get("stored_ranks", [])],
            seed=int(d.get("seed", 0)),
            size_jitter=float(d.get("size_jitter", 0.05)),
        )

    def to_dict(self) -> dict:
        return {
            "sequences": [
                {"id": s.id, "duration_s": s.duration_s, "segment_duration_s": s.segment_duration_s}
                for s in self.sequences
            ],
            "ladder": [{"rank": r, "bitrate_bps": b} for r, b in self.ladder],
            "stored_ranks": list(self.stored_ranks),
            "seed": self.seed,
            "size_jitter": self.size_jitter,
        }

    @classmethod
    def from_file(cls, path) -> "CatalogConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class BitrateLadder:
    bitrates: dict[int, int] = field(default_factory=dict)  # rank -> bits/second
    stored_ranks: frozenset[int] = frozenset()

    def __post_init__(self):
        ranks = sorted(self.bitrates)
        if len(ranks) < 2:
            raise ConfigError("ladder needs at least 2 representations")
        if ranks != list(range(1, len(ranks) + 1)):
            raise ConfigError(f"ladder ranks must be 1..L without gaps, got {ranks}")
        rates = [self.bitrates[r] for r in ranks]
        if any(b <= 0 for b in rates):
            raise ConfigError("bitrates must be positive")
        if any(hi <= lo for lo, hi in zip(rates, rates[1:])):
            raise ConfigError("bitrates must strictly increase with rank")
        if not self.stored_ranks:
            raise ConfigError("stored_ranks must not be empty")
        if not self.stored_ranks <= set(ranks):
            raise ConfigError(f"stored_ranks {sorted(self.stored_ranks)} outside ladder {ranks}")
        if self.top_rank not in self.stored_ranks:
            raise ConfigError("the highest rank must be stored (it is the transcoding source)")

    @property
    def top_rank(self) -> int:
        return len(self.bitrates)

    @property
    def ranks(self) -> list[int]:
        return list(range(1, len(self.bitrates) + 1))

    def bitrate(self, rank: int) -> int:
        try:
            return self.bitrates[rank]
        except KeyError:
            raise NotFoundError(f"no rank {rank} in ladder") from None

    def is_stored(self, rank: int) -> bool:
        return rank in self.stored_ranks


@dataclass(frozen=True)
class SegmentDescriptor:
    sequence: str
    rep: int
    index: int
    duration: float
    size: int


@dataclass(frozen=True)
class SegmentPayload:
    """Lazy handle on a segment's bytes; equal handles materialize equal bytes."""

    descriptor: SegmentDescriptor
    seed: int
    jitter: float

    @property
    def size(self) -> int:
        return self.descriptor.size

    def to_bytes(self) -> bytes:
        rng = _segment_rng(self.seed, self.descriptor.sequence, self.descriptor.rep, self.descriptor.index)
        rng.uniform(-1.0, 1.0)  # consume the size-jitter draw so bytes match the sized descriptor
        return rng.bytes(self.descriptor.size)


def _segment_rng(seed: int, sequence: str, rep: int, index: int) -> np.random.Generator:
    seq_key = int.from_bytes(hashlib.sha256(sequence.encode("utf-8")).digest()[:8], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, seq_key, rep, index])))


class Catalog:
    """Immutable after construction; safe for unrestricted concurrent reads."""

    def __init__(self, config: CatalogConfig):
        if not config.sequences:
            raise ConfigError("catalog needs at least one sequence")
        for s in config.sequences:
            if s.duration_s <= 0 or s.segment_duration_s <= 0:
                raise ConfigError(f"sequence {s.id!r}: durations must be positive")
        if not 0 <= config.size_jitter < 1:
            raise ConfigError(f"size_jitter must be in [0, 1), got {config.size_jitter}")
        ids = [s.id for s in config.sequences]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate sequence ids")
        self.ladder = BitrateLadder(dict(config.ladder), frozenset(config.stored_ranks))
        self.seed = config.seed
        self.size_jitter = config.size_jitter
        self._sequences = {s.id: s for s in config.sequences}
        self._config = config

    @property
    def config(self) -> CatalogConfig:
        return self._config

    @property
    def sequence_ids(self) -> list[str]:
        return list(self._sequences)

    def sequence(self, seq: str) -> SequenceConfig:
        try:
            return self._sequences[seq]
        except KeyError:
            raise NotFoundError(f"unknown sequence {seq!r}") from None

    def segment_count(self, seq: str) -> int:
        s = self.sequence(seq)
        return math.ceil(s.duration_s / s.segment_duration_s)

    def descriptor(self, seq: str, rep: int, index: int) -> SegmentDescriptor:
        s = self.sequence(seq)
        bitrate = self.ladder.bitrate(rep)
        count = self.segment_count(seq)
        if not 0 <= index < count:
            raise NotFoundError(f"segment index {index} out of range [0, {count}) for {seq!r}")
        duration = min(s.segment_duration_s, s.duration_s - index * s.segment_duration_s)
        base = bitrate * duration / 8
        u = _segment_rng(self.seed, seq, rep, index).uniform(-self.size_jitter, self.size_jitter)
        size = max(1, round(base * (1 + u)))
        return SegmentDescriptor(seq, rep, index, duration, size)

    def payload(self, desc: SegmentDescriptor) -> SegmentPayload:
        """Payload for any valid descriptor, stored or not (the transcoder output path)."""
        return SegmentPayload(desc, self.seed, self.size_jitter)

    def get_segment(self, desc: SegmentDescriptor) -> SegmentPayload | None:
        """Origin storage lookup: the payload if this rank is stored, else None."""
        self.descriptor(desc.sequence, desc.rep, desc.index)  # validates addressing
        if not self.ladder.is_stored(desc.rep):
            return None
        return self.payload(desc)

    def manifest_for(self, seq: str) -> dict:
        """All ladder representations are advertised; transcoding is transparent to clients."""
        s = self.sequence(seq)
        return {
            "sequence": s.id,
            "duration_s": s.duration_s,
            "segment_duration_s": s.segment_duration_s,
            "segment_count": self.segment_count(seq),
            "representations": [
                {"rank": r, "bitrate_bps": self.ladder.bitrate(r)} for r in self.ladder.ranks
            ],
            "url_template": URL_TEMPLATE,
        }


# Fixture ladder: monotone, roughly 8x span from lowest to highest rank. The
# absolute numbers are placeholders for real encoder rate points and are
# overridden freely from config files. They are sized so the full lowest-rank
# corpus of the four fixture sequences fits the default cache budget, which
# keeps lowest-rank fallback traffic cheap the way pre-encoded fallbacks are.
FIXTURE_LADDER = [
    (1, 2_000_000),
    (2, 3_500_000),
    (3, 6_000_000),
    (4, 10_000_000),
    (5, 16_000_000),
]

FIXTURE_SEQUENCES = ["longdress", "loot", "redandblack", "soldier"]


def default_config(
    segment_duration_s: float = 4.0,
    duration_s: float = 80.0,
    stored_ranks: list[int] | None = None,
    seed: int = 7,
) -> CatalogConfig:
    """Four-sequence fixture catalog used by tests and as a CLI starting point."""
    return CatalogConfig(
        sequences=[SequenceConfig(sid, duration_s, segment_duration_s) for sid in FIXTURE_SEQUENCES],
        ladder=list(FIXTURE_LADDER),
        stored_ranks=stored_ranks if stored_ranks is not None else [5],
        seed=seed,
    )
