"""Audio segmentation over per-frame split probabilities or energies.

`dnc_split` is the probabilistic divide-and-conquer scheme: recursively cut
the span at the most probable split frame until every segment fits under
the length cap. `hybrid_split` is a greedy length/content baseline that
cuts at the quietest frame inside a length window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FRAME_MS, read_features

__all__ = [
    "SplitProbabilities",
    "SegmentationConfig",
    "Segment",
    "SegmentManifest",
    "dnc_split",
    "hybrid_split",
    "validate_manifest",
    "load_split_probabilities",
    "manifest_to_json",
    "manifest_from_json",
    "save_manifest",
    "load_manifest",
]


@dataclass(frozen=True)
class SplitProbabilities:
    """Per-frame probability of being a good split point."""

    values: np.ndarray
    frame_duration_ms: float = FRAME_MS

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("split probabilities must be a non-empty 1-D array")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("split probabilities must lie in [0, 1]")
        if self.frame_duration_ms <= 0:
            raise ValueError("frame_duration_ms must be positive")
        object.__setattr__(self, "values", arr)

    @property
    def frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def total_ms(self) -> float:
        return self.frames * self.frame_duration_ms


@dataclass(frozen=True)
class SegmentationConfig:
    max_segment_ms: float
    min_segment_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.max_segment_ms <= 0:
            raise ValueError("max_segment_ms must be positive")
        if self.min_segment_ms < 0:
            raise ValueError("min_segment_ms must be non-negative")
        if not self.min_segment_ms < self.max_segment_ms:
            raise ValueError("min_segment_ms must be < max_segment_ms")


@dataclass(frozen=True)
class Segment:
    start_ms: float
    end_ms: float

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class SegmentManifest:
    total_ms: float
    segments: tuple[Segment, ...]
    warnings: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.segments)


def _feasible_cuts(lo: int, hi: int, frame_ms: float, min_ms: float) -> range:
    """Interior frames f of span [lo, hi) leaving both halves >= min_ms."""
    # Boundary at frame f: left = (f - lo) frames, right = (hi - f) frames.
    need = math.ceil(min_ms / frame_ms) if min_ms > 0 else 1
    need = max(need, 1)
    return range(lo + need, hi - need + 1)


def dnc_split(probs: SplitProbabilities, cfg: SegmentationConfig) -> SegmentManifest:
    """Divide-and-conquer split at maximal-probability frames.

    Spans at or under max_segment_ms are emitted as-is; longer spans are cut
    at the highest-probability frame whose boundary leaves both halves at
    least min_segment_ms long (ties to the lowest frame index), and both
    halves are re-examined. A span with no feasible cut falls back to its
    midpoint and the event is recorded as a warning; the frame put at the
    boundary always opens the right-hand segment.
    """
    fm = probs.frame_duration_ms
    values = probs.values
    segments: list[Segment] = []
    warnings: list[str] = []
    stack: list[tuple[int, int]] = [(0, probs.frames)]
    while stack:
        lo, hi = stack.pop()
        span_ms = (hi - lo) * fm
        if span_ms <= cfg.max_segment_ms:
            segments.append(Segment(lo * fm, hi * fm))
            continue
        if hi - lo < 2:
            # Single frame longer than the cap; nothing to cut.
            segments.append(Segment(lo * fm, hi * fm))
            warnings.append(
                f"span [{lo * fm:g}, {hi * fm:g}) ms exceeds max but has no interior frame"
            )
            continue
        cuts = _feasible_cuts(lo, hi, fm, cfg.min_segment_ms)
        if len(cuts) > 0:
            window = values[cuts.start : cuts.stop]
            f = cuts.start + int(np.argmax(window))
        else:
            f = lo + (hi - lo) // 2
            warnings.append(
                f"no cut in [{lo * fm:g}, {hi * fm:g}) ms satisfies the minimum "
                f"length; fell back to the midpoint at {f * fm:g} ms"
            )
        # Right half pushed first so the left half is emitted first.
        stack.append((f, hi))
        stack.append((lo, f))
    return SegmentManifest(probs.frames * fm, tuple(segments), tuple(warnings))


def hybrid_split(
    energy: Sequence[float] | np.ndarray,
    cfg: SegmentationConfig,
    frame_duration_ms: float = FRAME_MS,
) -> SegmentManifest:
    """Greedy left-to-right split at the quietest frame in the length window.

    From each segment start, candidate cuts are the frames between
    min_segment_ms and max_segment_ms later; the minimal-energy candidate
    wins, ties going to the latest frame so uninformative content yields
    maximal-length segments. A remainder at or under the cap is emitted
    whole.
    """
    arr = np.asarray(energy, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("energy must be a non-empty 1-D array")
    fm = frame_duration_ms
    if fm <= 0:
        raise ValueError("frame_duration_ms must be positive")
    T = int(arr.shape[0])
    segments: list[Segment] = []
    warnings: list[str] = []
    s = 0
    while (T - s) * fm > cfg.max_segment_ms:
        first = s + max(1, math.ceil(cfg.min_segment_ms / fm))
        last = min(s + math.floor(cfg.max_segment_ms / fm), T - 1)
        if first > last:
            f = min(T - 1, max(s + 1, s + round((cfg.min_segment_ms + cfg.max_segment_ms) / (2 * fm))))
            warnings.append(
                f"no cut after {s * fm:g} ms satisfies the length window; "
                f"fell back to {f * fm:g} ms"
            )
        else:
            window = arr[first : last + 1]
            # Latest index among minima.
            f = last - int(np.argmin(window[::-1]))
        segments.append(Segment(s * fm, f * fm))
        s = f
    segments.append(Segment(s * fm, T * fm))
    return SegmentManifest(T * fm, tuple(segments), tuple(warnings))


def validate_manifest(manifest: SegmentManifest, total_ms: float) -> list[str]:
    """All invariant violations, empty iff the manifest is well-formed."""
    problems: list[str] = []
    segs = manifest.segments
    if not segs:
        return [f"empty manifest for {total_ms:g} ms of audio"]
    if segs[0].start_ms != 0:
        problems.append(f"first segment starts at {segs[0].start_ms:g} ms, expected 0")
    for seg in segs:
        if not seg.end_ms > seg.start_ms:
            problems.append(f"empty or reversed segment at {seg.start_ms:g} ms")
    for prev, cur in zip(segs, segs[1:]):
        if cur.start_ms > prev.end_ms:
            problems.append(f"gap at {prev.end_ms:g} ms")
        elif cur.start_ms < prev.end_ms:
            problems.append(f"overlap at {cur.start_ms:g} ms")
    if segs[-1].end_ms != total_ms:
        problems.append(
            f"last segment ends at {segs[-1].end_ms:g} ms, expected {total_ms:g}"
        )
    return problems


def load_split_probabilities(path: str | Path) -> SplitProbabilities:
    """Read probabilities from the single-column binary feature container."""
    matrix = read_features(path)
    if matrix.dim != 1:
        raise ValueError(f"expected a single probability column, found {matrix.dim}")
    return SplitProbabilities(matrix.values[:, 0], matrix.frame_duration_ms)


def manifest_to_json(manifest: SegmentManifest) -> dict:
    return {
        "total_ms": manifest.total_ms,
        "segments": [
            {"start_ms": seg.start_ms, "end_ms": seg.end_ms} for seg in manifest.segments
        ],
        "warnings": list(manifest.warnings),
    }


def manifest_from_json(payload: dict) -> SegmentManifest:
    segments = tuple(
        Segment(float(entry["start_ms"]), float(entry["end_ms"]))
        for entry in payload["segments"]
    )
    return SegmentManifest(
        float(payload["total_ms"]), segments, tuple(payload.get("warnings", ()))
    )


def save_manifest(manifest: SegmentManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_json(manifest), indent=2) + "\n")


def load_manifest(path: str | Path) -> SegmentManifest:
    return manifest_from_json(json.loads(Path(path).read_text()))
