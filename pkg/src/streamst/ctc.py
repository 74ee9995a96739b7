"""CTC decoding, forward loss, and sequence compression.

The compression path shortens an encoder-state sequence by averaging runs of
frames that share the same greedy CTC label. Two safeguards keep the output
length bounded when the CTC predictions are unreliable: a hard cap that
re-merges the compressed sequence with a uniform factor, and an epoch-gated
fixed compression that averages blocks of 4 frames outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import kernels

BLANK_INDEX = 0

# Word-initial marker used by SentencePiece-style vocabularies.
WORD_MARKER = "▁"

# Group label for vectors that average frames with mixed labels.
UNLABELED = -1

_ROW_NORM_TOL = 1e-4


@dataclass(frozen=True)
class Vocabulary:
    """Token inventory with the blank at index 0 and word-start flags."""

    begins_word: tuple[bool, ...]
    tokens: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.begins_word) < 2:
            raise ValueError("vocabulary must have at least blank + 1 token")
        if self.begins_word[BLANK_INDEX]:
            raise ValueError("the blank token never begins a word")
        if self.tokens is not None and len(self.tokens) != len(self.begins_word):
            raise ValueError("tokens and begins_word must have the same length")

    @property
    def size(self) -> int:
        return len(self.begins_word)

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], blank: str = "<blank>") -> "Vocabulary":
        """Build from token strings; index 0 is the blank, word starts are
        tokens carrying the SentencePiece marker."""
        all_tokens = (blank, *tokens)
        flags = tuple(i > 0 and t.startswith(WORD_MARKER) for i, t in enumerate(all_tokens))
        return cls(begins_word=flags, tokens=all_tokens)


@dataclass(frozen=True)
class CtcPosterior:
    """Per-frame log-probabilities over a vocabulary (rows normalized)."""

    logprobs: np.ndarray
    vocab: Vocabulary

    def __post_init__(self):
        logprobs = np.asarray(self.logprobs, dtype=np.float64)
        if logprobs.ndim != 2:
            raise ValueError("logprobs must be a (frames, vocab) matrix")
        if logprobs.shape[1] != self.vocab.size:
            raise ValueError(
                f"posterior width {logprobs.shape[1]} does not match "
                f"vocabulary size {self.vocab.size}"
            )
        if logprobs.shape[0] > 0:
            norms = _logsumexp_rows(logprobs)
            worst = float(np.abs(norms).max())
            if worst > _ROW_NORM_TOL:
                raise ValueError(
                    f"posterior rows must be normalized (max |logsumexp| = {worst:.2e})"
                )
        object.__setattr__(self, "logprobs", logprobs)

    @property
    def frames(self) -> int:
        return self.logprobs.shape[0]


def _logsumexp_rows(logprobs: np.ndarray) -> np.ndarray:
    peak = logprobs.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(logprobs - peak).sum(axis=1, keepdims=True))).ravel()


@dataclass(frozen=True)
class CompressedSequence:
    """Averaged vectors with the label and frame count of each group."""

    vectors: np.ndarray
    group_labels: np.ndarray
    group_sizes: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        labels = np.asarray(self.group_labels, dtype=np.int_)
        sizes = np.asarray(self.group_sizes, dtype=np.int_)
        if not (len(vectors) == len(labels) == len(sizes)):
            raise ValueError("vectors, group_labels and group_sizes must align")
        if len(sizes) and sizes.min() < 1:
            raise ValueError("group sizes must be >= 1")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "group_labels", labels)
        object.__setattr__(self, "group_sizes", sizes)

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def source_frames(self) -> int:
        return int(self.group_sizes.sum())


class CompressionMode(Enum):
    FIXED = "fixed"
    CTC_DRIVEN = "ctc_driven"


@dataclass(frozen=True)
class CompressionSchedule:
    """Fixed compression for the first `n_epochs_fixed` epochs, CTC-driven after."""

    n_epochs_fixed: int
    fixed_group: int = 4

    def __post_init__(self):
        if self.n_epochs_fixed < 0:
            raise ValueError("n_epochs_fixed must be >= 0")
        if self.fixed_group < 1:
            raise ValueError("fixed_group must be >= 1")


def schedule_mode(sched: CompressionSchedule, epoch: int) -> CompressionMode:
    return CompressionMode.FIXED if epoch < sched.n_epochs_fixed else CompressionMode.CTC_DRIVEN


def greedy_labels(post: CtcPosterior) -> np.ndarray:
    """Per-frame argmax labels; ties resolve to the lowest token index."""
    if post.frames == 0:
        raise ValueError("cannot decode an empty posterior")
    return post.logprobs.argmax(axis=1)


def collapse(labels: Sequence[int] | np.ndarray, blank: int = BLANK_INDEX) -> list[int]:
    """Merge consecutive duplicates, then drop blanks."""
    out: list[int] = []
    prev = None
    for label in labels:
        label = int(label)
        if label != prev and label != blank:
            out.append(label)
        prev = label
    return out


def ctc_forward_loss(post: CtcPosterior, target: Sequence[int]) -> float:
    """Negative log-likelihood of `target` under the posterior.

    Sums, in log space, over every frame-level path whose collapsed form
    equals the target. Targets that cannot fit in the available frames
    (too long, or repeated labels without room for a separating blank)
    yield +inf rather than raising, so batch statistics stay computable.
    """
    target = [int(t) for t in target]
    if any(t == BLANK_INDEX for t in target):
        raise ValueError("target must not contain the blank token")
    if any(not 0 <= t < post.vocab.size for t in target):
        raise ValueError("target contains out-of-vocabulary indices")
    if post.frames == 0:
        return 0.0 if not target else math.inf

    ext = np.full(2 * len(target) + 1, BLANK_INDEX, dtype=np.int_)
    ext[1::2] = target
    return kernels.ctc_forward_nll(post.logprobs, ext)


def _run_starts(labels: np.ndarray) -> np.ndarray:
    """Indices where a new run of identical labels begins."""
    starts = np.flatnonzero(np.diff(labels)) + 1
    return np.concatenate(([0], starts))


def ctc_compress(feats: np.ndarray, post: CtcPosterior) -> CompressedSequence:
    """Average each run of frames sharing the same greedy label.

    Blank-labeled runs are kept as groups of their own, so the output is a
    lossless mass-conserving summary: group_size-weighted vectors sum to the
    column sums of the input.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("encoder states must be a (frames, dim) matrix")
    if feats.shape[0] != post.frames:
        raise ValueError(
            f"length mismatch: {feats.shape[0]} encoder frames vs "
            f"{post.frames} posterior frames"
        )
    labels = greedy_labels(post)
    starts = _run_starts(labels)
    vectors = kernels.segment_mean(feats, starts)
    ends = np.concatenate((starts[1:], [len(labels)]))
    return CompressedSequence(
        vectors=vectors,
        group_labels=labels[starts],
        group_sizes=ends - starts,
    )


def fixed_compress(feats: np.ndarray, block: int = 4) -> CompressedSequence:
    """Average consecutive blocks of `block` frames (last block may be short).

    Frame labels are meaningless for mixed blocks, so groups carry the
    UNLABELED sentinel.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise ValueError("input must be a non-empty (frames, dim) matrix")
    if block < 1:
        raise ValueError("block must be >= 1")
    T = feats.shape[0]
    starts = np.arange(0, T, block, dtype=np.int_)
    vectors = kernels.segment_mean(feats, starts)
    ends = np.concatenate((starts[1:], [T]))
    return CompressedSequence(
        vectors=vectors,
        group_labels=np.full(len(starts), UNLABELED, dtype=np.int_),
        group_sizes=ends - starts,
    )


def max_output_length_merge(seq: CompressedSequence, max_input_len: int) -> CompressedSequence:
    """Cap the compressed length at a quarter of the maximum input length.

    If the sequence is longer than floor(max_input_len / 4), consecutive
    vectors are averaged in uniform blocks of f, where f is the smallest
    factor >= 2 bringing the length under the cap; e.g. a sequence of 2346
    with a 4000-frame maximum merges with f = 3 down to 782. Below the cap
    the sequence passes through unchanged.
    """
    if max_input_len < 4:
        raise ValueError("max_input_len must be >= 4")
    threshold = max_input_len // 4
    n = len(seq)
    if n <= threshold:
        return seq
    # Smallest integer f with ceil(n / f) <= threshold; always >= 2 here.
    factor = math.ceil(n / threshold)
    starts = np.arange(0, n, factor, dtype=np.int_)
    vectors = kernels.segment_mean(seq.vectors, starts)
    ends = np.concatenate((starts[1:], [n]))
    sizes = np.add.reduceat(seq.group_sizes, starts)
    return CompressedSequence(
        vectors=vectors,
        group_labels=np.full(len(starts), UNLABELED, dtype=np.int_),
        group_sizes=sizes,
    )


def count_words(post: CtcPosterior) -> int:
    """Number of word-initial tokens in the collapsed greedy decoding."""
    if post.frames == 0:
        return 0
    collapsed = collapse(greedy_labels(post))
    flags = post.vocab.begins_word
    return sum(1 for token in collapsed if flags[token])
