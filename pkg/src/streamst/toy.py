"""Scripted toy model with exactly predictable behavior.

A script lists the source words of one utterance with the time each word
ends, plus the target tokens each word translates to. The model derived
from it satisfies the streaming model contract: encoding a consumed prefix
yields near-one-hot CTC posteriors that reveal exactly the words already
finished by that point, and decoding walks the concatenated target tokens
of the revealed words. Every quantity in an end-to-end run is therefore
computable by hand, which is what the golden trace fixtures rely on.

Each source word occurrence gets its own vocabulary index (blank is 0, the
i-th word is i+1) so that repeated words survive CTC collapse as distinct
labels and the adaptive word count equals the number of revealed words.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ctc import BLANK_INDEX, CtcPosterior, Vocabulary, WORD_MARKER
from .features import FRAME_MS, FeatureMatrix

__all__ = [
    "ScriptWord",
    "Script",
    "ToyModel",
    "load_script",
    "load_script_bank",
    "detokenize",
]

# Probability mass placed on the scripted label; the remainder is spread
# over the other entries so rows stay normalized.
PEAK_PROBABILITY = 1.0 - 1e-6


@dataclass(frozen=True)
class ScriptWord:
    text: str
    end_ms: float
    targets: tuple[str, ...]

    def __post_init__(self):
        if not self.text:
            raise ValueError("script word text must be non-empty")
        if self.end_ms <= 0:
            raise ValueError("word end_ms must be positive")
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class Script:
    """One scripted utterance: timed source words and their target tokens."""

    id: str
    total_ms: float
    words: tuple[ScriptWord, ...]
    frame_ms: float = FRAME_MS
    compute_ms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if not self.id:
            raise ValueError("script id must be non-empty")
        if self.frame_ms <= 0:
            raise ValueError("frame_ms must be positive")
        if self.compute_ms < 0:
            raise ValueError("compute_ms must be non-negative")
        if not self.words:
            raise ValueError("script must contain at least one word")
        self._check_grid(self.total_ms, "total_ms")
        prev = 0.0
        for word in self.words:
            if word.end_ms <= prev:
                raise ValueError("word end times must be strictly increasing")
            self._check_grid(word.end_ms, f"end_ms of {word.text!r}")
            prev = word.end_ms
        if prev > self.total_ms:
            raise ValueError("last word ends after total_ms")

    def _check_grid(self, value: float, what: str) -> None:
        # Reveal times are exact only when boundaries sit on the frame grid.
        frames = value / self.frame_ms
        if abs(frames - round(frames)) > 1e-9:
            raise ValueError(f"{what} must be a multiple of frame_ms ({self.frame_ms:g})")

    @property
    def frames(self) -> int:
        return round(self.total_ms / self.frame_ms)

    @property
    def vocabulary(self) -> Vocabulary:
        tokens = ("<blank>",) + tuple(w.text for w in self.words)
        flags = (False,) + (True,) * len(self.words)
        return Vocabulary(begins_word=flags, tokens=tokens)

    @property
    def transcript(self) -> str:
        return " ".join(w.text for w in self.words)

    @property
    def target_tokens(self) -> tuple[str, ...]:
        return tuple(t for w in self.words for t in w.targets)

    @property
    def translation(self) -> str:
        return detokenize(self.target_tokens)

    def revealed_words(self, consumed_ms: float) -> int:
        return sum(1 for w in self.words if w.end_ms <= consumed_ms)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "frame_ms": self.frame_ms,
            "total_ms": self.total_ms,
            "compute_ms": self.compute_ms,
            "words": [
                {"text": w.text, "end_ms": w.end_ms, "targets": list(w.targets)}
                for w in self.words
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Script":
        words = tuple(
            ScriptWord(entry["text"], float(entry["end_ms"]), tuple(entry["targets"]))
            for entry in payload["words"]
        )
        return cls(
            id=str(payload["id"]),
            total_ms=float(payload["total_ms"]),
            words=words,
            frame_ms=float(payload.get("frame_ms", FRAME_MS)),
            compute_ms=float(payload.get("compute_ms", 0.0)),
        )


def detokenize(tokens: Sequence[str]) -> str:
    """Join subword tokens, turning word markers back into spaces."""
    return "".join(tokens).replace(WORD_MARKER, " ").strip()


class ToyModel:
    """Streaming model whose outputs are read off a script."""

    def __init__(self, script: Script):
        self.script = script
        self.vocab = script.vocabulary
        # Frame j carries the label of the word ending at (j+1)*frame_ms.
        labels = np.full(script.frames, BLANK_INDEX, dtype=np.int64)
        for i, word in enumerate(script.words):
            labels[round(word.end_ms / script.frame_ms) - 1] = i + 1
        self._labels = labels
        self._log_peak = math.log(PEAK_PROBABILITY)
        self._log_rest = math.log((1.0 - PEAK_PROBABILITY) / (self.vocab.size - 1))

    @property
    def simulated_compute_ms(self) -> float:
        return self.script.compute_ms

    def make_features(self) -> FeatureMatrix:
        """Deterministic stand-in features for the full utterance."""
        t = np.arange(self.script.frames, dtype=np.float64)[:, None]
        d = np.arange(4, dtype=np.float64)[None, :]
        return FeatureMatrix(np.sin(0.01 * t * (d + 1.0)), self.script.frame_ms)

    def encode_prefix(self, feats: FeatureMatrix) -> CtcPosterior:
        frames = feats.frames
        if frames > self.script.frames:
            raise ValueError(
                f"prefix of {frames} frames exceeds the scripted utterance "
                f"({self.script.frames} frames)"
            )
        logprobs = np.full((frames, self.vocab.size), self._log_rest)
        rows = np.arange(frames)
        logprobs[rows, self._labels[:frames]] = self._log_peak
        return CtcPosterior(logprobs, self.vocab)

    def decode_next(self, feats: FeatureMatrix, emitted: Sequence[str]) -> str | None:
        consumed_ms = feats.frames * self.script.frame_ms
        revealed = self.script.revealed_words(consumed_ms)
        available = [t for w in self.script.words[:revealed] for t in w.targets]
        if len(emitted) < len(available):
            return available[len(emitted)]
        return None


def load_script(path: str | Path) -> Script:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(payload, dict) and "words" in payload:
        return Script.from_json(payload)
    raise ValueError(f"{path} does not contain a single script object")


def load_script_bank(path: str | Path) -> dict[str, Script]:
    """Scripts keyed by utterance id; accepts one script, a list, or
    {"scripts": [...]}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(payload, dict) and "scripts" in payload:
        entries = payload["scripts"]
    elif isinstance(payload, dict):
        entries = [payload]
    elif isinstance(payload, list):
        entries = payload
    else:
        raise ValueError(f"{path} does not contain scripts")
    scripts = [Script.from_json(entry) for entry in entries]
    bank = {s.id: s for s in scripts}
    if len(bank) != len(scripts):
        raise ValueError("duplicate script ids")
    return bank
