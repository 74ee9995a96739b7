"""Feature matrices and cepstral mean/variance normalization (CMVN).

Audio enters the toolkit as precomputed filterbank-style features: T frames
of D coefficients at a fixed 10 ms frame shift. CMVN statistics can be
estimated per utterance (offline use) or pooled over a whole corpus (global
stats, reusable across streaming runs via a JSON sidecar).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

import numpy as np

FRAME_MS = 10.0

# Constant feature dimensions would otherwise normalize to 0/0.
VARIANCE_FLOOR = 1e-8

_MAGIC = b"FBNK"
_HEADER = struct.Struct("<4sII")


class StatsSource(Enum):
    UTTERANCE = "utterance"
    GLOBAL = "global"


@dataclass(frozen=True)
class FeatureMatrix:
    """T x D matrix of real-valued frames, one row per 10 ms frame."""

    values: np.ndarray
    frame_duration_ms: float = FRAME_MS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        if not self.frame_duration_ms > 0:
            raise ValueError("frame_duration_ms must be > 0")
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def duration_ms(self) -> float:
        return self.frames * self.frame_duration_ms

    def prefix(self, frames: int) -> "FeatureMatrix":
        """First `frames` rows, as consumed by a streaming session."""
        return FeatureMatrix(self.values[:frames], self.frame_duration_ms)


@dataclass(frozen=True)
class CmvnStats:
    """Per-dimension mean and (floored) population variance."""

    mean: np.ndarray
    variance: np.ndarray
    source: StatsSource

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        variance = np.asarray(self.variance, dtype=np.float64)
        if mean.ndim != 1 or variance.shape != mean.shape:
            raise ValueError("mean and variance must be 1-D and the same length")
        if np.any(variance < VARIANCE_FLOOR):
            raise ValueError(f"variance entries must be >= {VARIANCE_FLOOR}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class CmvnAccumulator:
    """Single-pass moment accumulator, mergeable for parallel estimation.

    Pooling is frame-weighted: every frame of every utterance contributes
    equally to the global moments.
    """

    n_frames: int = 0
    total: np.ndarray | None = None
    total_sq: np.ndarray | None = None

    def add(self, feats: FeatureMatrix) -> None:
        if self.total is None:
            self.total = np.zeros(feats.dim)
            self.total_sq = np.zeros(feats.dim)
        elif self.total.shape[0] != feats.dim:
            raise ValueError(
                f"dimension mismatch: accumulator has {self.total.shape[0]}, "
                f"matrix has {feats.dim}"
            )
        self.n_frames += feats.frames
        self.total += feats.values.sum(axis=0)
        self.total_sq += np.square(feats.values).sum(axis=0)

    def merge(self, other: "CmvnAccumulator") -> None:
        if other.total is None:
            return
        if self.total is None:
            self.n_frames = other.n_frames
            self.total = other.total.copy()
            self.total_sq = other.total_sq.copy()
            return
        if self.total.shape != other.total.shape:
            raise ValueError("cannot merge accumulators of different dimension")
        self.n_frames += other.n_frames
        self.total += other.total
        self.total_sq += other.total_sq

    def finalize(self, source: StatsSource) -> CmvnStats:
        if self.n_frames == 0:
            raise ValueError("no frames accumulated")
        mean = self.total / self.n_frames
        variance = self.total_sq / self.n_frames - np.square(mean)
        variance = np.maximum(variance, VARIANCE_FLOOR)
        return CmvnStats(mean=mean, variance=variance, source=source)


def cmvn_estimate_utterance(feats: FeatureMatrix) -> CmvnStats:
    """Per-dimension mean and population variance of a single utterance."""
    if feats.frames == 0:
        raise ValueError("empty utterance")
    mean = feats.values.mean(axis=0)
    variance = feats.values.var(axis=0)  # population variance (ddof=0)
    variance = np.maximum(variance, VARIANCE_FLOOR)
    return CmvnStats(mean=mean, variance=variance, source=StatsSource.UTTERANCE)


def cmvn_estimate_global(corpus: Iterable[FeatureMatrix]) -> CmvnStats:
    """Moments pooled over all frames of all matrices in the stream."""
    acc = CmvnAccumulator()
    for feats in corpus:
        acc.add(feats)
    if acc.n_frames == 0:
        raise ValueError("empty corpus stream")
    return acc.finalize(StatsSource.GLOBAL)


def cmvn_apply(feats: FeatureMatrix, stats: CmvnStats) -> FeatureMatrix:
    """Normalize to (x - mean) / sqrt(variance), preserving the shape."""
    if stats.dim != feats.dim:
        raise ValueError(
            f"dimension mismatch: stats have {stats.dim}, features have {feats.dim}"
        )
    normalized = (feats.values - stats.mean) / np.sqrt(stats.variance)
    return FeatureMatrix(normalized, feats.frame_duration_ms)


# ---------------------------------------------------------------------------
# Serialization
#
# Binary container: magic "FBNK", u32 frames, u32 dim (little-endian), then
# frames*dim little-endian float32 values in row-major order. The same
# container carries feature matrices, CTC log-posteriors (dim = vocabulary
# size) and split probabilities (dim = 1).
# ---------------------------------------------------------------------------


def write_features(path: str | Path | IO[bytes], feats: FeatureMatrix) -> None:
    data = _HEADER.pack(_MAGIC, feats.frames, feats.dim)
    data += feats.values.astype("<f4").tobytes()
    if hasattr(path, "write"):
        path.write(data)
    else:
        Path(path).write_bytes(data)


def read_features(path: str | Path | IO[bytes], frame_duration_ms: float = FRAME_MS) -> FeatureMatrix:
    if hasattr(path, "read"):
        data = path.read()
    else:
        data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated feature container")
    magic, frames, dim = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    expected = _HEADER.size + 4 * frames * dim
    if len(data) != expected:
        raise ValueError(f"container size {len(data)} does not match header ({expected})")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    return FeatureMatrix(values.reshape(frames, dim), frame_duration_ms)


def stats_to_json(stats: CmvnStats) -> str:
    return json.dumps(
        {
            "mean": stats.mean.tolist(),
            "variance": stats.variance.tolist(),
            "source": stats.source.value,
        }
    )


def stats_from_json(text: str) -> CmvnStats:
    raw = json.loads(text)
    return CmvnStats(
        mean=np.asarray(raw["mean"], dtype=np.float64),
        variance=np.asarray(raw["variance"], dtype=np.float64),
        source=StatsSource(raw["source"]),
    )


def save_stats(path: str | Path, stats: CmvnStats) -> None:
    Path(path).write_text(stats_to_json(stats), encoding="utf-8")


def load_stats(path: str | Path) -> CmvnStats:
    return stats_from_json(Path(path).read_text(encoding="utf-8"))
