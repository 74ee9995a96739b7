"""Corpus manifests, quality filters, histograms, and origin tagging.

A manifest is a TSV file with the header
``id\taudio_frames\ttranscript\ttranslation\tnll\torigin`` where
`audio_frames` counts 10 ms frames, `nll` is an optional per-sequence
negative log-likelihood under a strong reference model, and `origin` marks
native vs synthetic (distilled) translations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

MANIFEST_COLUMNS = ("id", "audio_frames", "transcript", "translation", "nll", "origin")


class Origin(Enum):
    NATIVE = "native"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    audio_frames: int
    transcript: str
    translation: str
    nll: float | None = None
    origin: Origin = Origin.NATIVE

    def __post_init__(self):
        object.__setattr__(self, "transcript", self.transcript.strip())
        object.__setattr__(self, "translation", self.translation.strip())
        if self.audio_frames <= 0:
            raise ValueError(f"{self.id}: audio_frames must be > 0")
        if not self.transcript:
            raise ValueError(f"{self.id}: empty transcript")
        if not self.translation:
            raise ValueError(f"{self.id}: empty translation")
        if self.nll is not None and self.nll < 0:
            raise ValueError(f"{self.id}: nll must be non-negative")


@dataclass(frozen=True)
class InvalidRecord:
    """Placeholder for a manifest row that failed to parse."""

    id: str
    reason: str


@dataclass(frozen=True)
class FilterConfig:
    min_char_ratio: float = 0.8
    max_char_ratio: float = 1.6
    nll_threshold: float | None = 4.0
    chars_per_frame_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.min_char_ratio < self.max_char_ratio:
            raise ValueError("min_char_ratio must be < max_char_ratio")
        if self.min_char_ratio <= 0:
            raise ValueError("char-ratio bounds must be > 0")
        if self.nll_threshold is not None and self.nll_threshold <= 0:
            raise ValueError("nll_threshold must be > 0")
        if self.chars_per_frame_bounds is not None:
            lo, hi = self.chars_per_frame_bounds
            if not 0 < lo < hi:
                raise ValueError("chars_per_frame_bounds must satisfy 0 < min < max")


def char_ratio(rec: CorpusRecord) -> float:
    """Translation-to-transcript length ratio in characters (spaces included)."""
    if not rec.transcript:
        raise ValueError("zero-length source")
    return len(rec.translation) / len(rec.transcript)


def chars_per_frame(rec: CorpusRecord) -> float:
    """Translation characters per 10 ms audio frame."""
    if rec.audio_frames <= 0:
        raise ValueError("audio_frames must be > 0")
    return len(rec.translation) / rec.audio_frames


# Rejection reasons, in attribution order: the first failing rule wins.
REASON_INVALID = "invalid"
REASON_CHAR_RATIO = "char_ratio"
REASON_CHARS_PER_FRAME = "chars_per_frame"
REASON_NLL = "nll"


@dataclass
class FilterReport:
    total: int = 0
    kept: int = 0
    rejected: dict[str, int] = field(
        default_factory=lambda: {REASON_CHAR_RATIO: 0, REASON_CHARS_PER_FRAME: 0, REASON_NLL: 0}
    )
    invalid: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "rejected": dict(self.rejected),
            "invalid": self.invalid,
        }


def rejection_reason(rec: CorpusRecord, cfg: FilterConfig) -> str | None:
    """First filter rule the record violates, or None if it passes all."""
    ratio = char_ratio(rec)
    if not cfg.min_char_ratio <= ratio <= cfg.max_char_ratio:
        return REASON_CHAR_RATIO
    if cfg.chars_per_frame_bounds is not None:
        lo, hi = cfg.chars_per_frame_bounds
        if not lo <= chars_per_frame(rec) <= hi:
            return REASON_CHARS_PER_FRAME
    if cfg.nll_threshold is not None and rec.nll is not None and rec.nll > cfg.nll_threshold:
        return REASON_NLL
    return None


def apply_filters(
    records: Iterable[CorpusRecord | InvalidRecord], cfg: FilterConfig
) -> tuple[list[CorpusRecord], FilterReport]:
    """Partition a record stream into kept records and a rejection report.

    Invalid rows are counted and skipped, never aborting the stream.
    """
    kept: list[CorpusRecord] = []
    report = FilterReport()
    for rec in records:
        report.total += 1
        if isinstance(rec, InvalidRecord):
            report.invalid += 1
            continue
        reason = rejection_reason(rec, cfg)
        if reason is None:
            kept.append(rec)
            report.kept += 1
        else:
            report.rejected[reason] += 1
    return kept, report


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram; bins are left-closed, the last bin is closed."""

    bin_edges: np.ndarray
    counts: np.ndarray
    dataset_label: str = ""
    n_below: int = 0
    n_above: int = 0

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int_)
        if len(counts) != len(edges) - 1:
            raise ValueError("need exactly one more edge than bins")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)


def build_histogram(
    values: Iterable[float],
    n_bins: int,
    value_range: tuple[float, float] | None = None,
    dataset_label: str = "",
) -> Histogram:
    """Bin a value stream into `n_bins` equal-width bins.

    Without an explicit range, the observed [min, max] is used. Values
    outside the range are not binned; they are counted in n_below/n_above.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    data = np.asarray(list(values), dtype=np.float64)
    if data.size == 0:
        raise ValueError("cannot build a histogram from an empty stream")
    if value_range is None:
        lo, hi = float(data.min()), float(data.max())
        if lo == hi:
            hi = lo + 1.0  # degenerate spread; any width works, all values fall in bin 0
    else:
        lo, hi = value_range
        if not lo < hi:
            raise ValueError("range must satisfy lo < hi")

    n_below = int((data < lo).sum())
    n_above = int((data > hi).sum())
    in_range = data[(data >= lo) & (data <= hi)]
    width = (hi - lo) / n_bins
    idx = np.floor((in_range - lo) / width).astype(np.int_)
    idx = np.clip(idx, 0, n_bins - 1)  # v == hi lands in the (closed) last bin
    counts = np.bincount(idx, minlength=n_bins)
    edges = lo + width * np.arange(n_bins + 1)
    return Histogram(
        bin_edges=edges,
        counts=counts,
        dataset_label=dataset_label,
        n_below=n_below,
        n_above=n_above,
    )


# ---------------------------------------------------------------------------
# Origin tags
# ---------------------------------------------------------------------------

_TAGS = {Origin.NATIVE: "<native> ", Origin.SYNTHETIC: "<synthetic> "}


def tag_origin(rec: CorpusRecord) -> str:
    """Translation with its origin tag prepended."""
    return _TAGS[rec.origin] + rec.translation


def strip_origin_tag(text: str) -> str:
    """Exact inverse of tag_origin."""
    for tag in _TAGS.values():
        if text.startswith(tag):
            return text[len(tag):]
    return text


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------


def parse_manifest_row(row: Sequence[str], line_no: int) -> CorpusRecord | InvalidRecord:
    if len(row) != len(MANIFEST_COLUMNS):
        return InvalidRecord(f"line {line_no}", f"expected {len(MANIFEST_COLUMNS)} columns, got {len(row)}")
    rec_id = row[0].strip() or f"line {line_no}"
    try:
        audio_frames = int(row[1])
        nll = float(row[4]) if row[4].strip() else None
        origin = Origin(row[5].strip().lower())
        return CorpusRecord(
            id=rec_id,
            audio_frames=audio_frames,
            transcript=row[2],
            translation=row[3],
            nll=nll,
            origin=origin,
        )
    except (ValueError, KeyError) as exc:
        return InvalidRecord(rec_id, str(exc))


def read_manifest(path: str | Path) -> Iterator[CorpusRecord | InvalidRecord]:
    """Stream records from a manifest TSV; malformed rows become InvalidRecord."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ValueError(
                f"{path}: bad manifest header, expected {chr(9).join(MANIFEST_COLUMNS)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            yield parse_manifest_row(row, line_no)


def write_manifest(path: str | Path, records: Iterable[CorpusRecord]) -> int:
    """Write records as a manifest TSV; returns the number of rows written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", quoting=csv.QUOTE_NONE, quotechar=None)
        writer.writerow(MANIFEST_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.id,
                    rec.audio_frames,
                    rec.transcript,
                    rec.translation,
                    "" if rec.nll is None else format(rec.nll, "g"),
                    rec.origin.value,
                ]
            )
            n += 1
    return n
