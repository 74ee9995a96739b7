"""Wait-k simultaneous decoding with adaptive word detection.

A session alternates READ and WRITE actions over one utterance. READ
consumes the next fixed-length speech segment and re-counts the source
words heard so far from the collapsed greedy CTC labels of the consumed
prefix (adaptive detection: the count moves with the audio content, not
with elapsed time). WRITE asks the model for the next target token. The
wait-k rule gates the start of every target word: word i+1 may begin only
once at least i + k source words are detected, or the source is exhausted.
Continuation tokens of a word already underway flow without a new policy
decision, so each WRITE decision spans exactly one target word.

Emission times land in a trace as (source_delay_ms, wallclock_delay_ms)
pairs. The clock is injected: `SimulatedClock` advances by the audio
duration on READ and by a fixed per-token cost on WRITE, which makes
computation-aware latency exactly reproducible; `SystemClock` measures
real elapsed time instead.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

from .ctc import CtcPosterior, WORD_MARKER, count_words
from .features import FeatureMatrix

__all__ = [
    "Action",
    "StreamConfig",
    "ModelInterface",
    "Clock",
    "SimulatedClock",
    "SystemClock",
    "TraceEvent",
    "SimulTrace",
    "SessionState",
    "SessionError",
    "SimulSession",
    "run_session",
    "SweepItem",
    "SweepRow",
    "sweep",
    "save_trace",
    "load_trace",
    "MAX_OUTPUT_TOKENS",
]

# Guards non-terminating decoders.
MAX_OUTPUT_TOKENS = 512


class Action(Enum):
    READ = "read"
    WRITE = "write"
    FINISH = "finish"


@dataclass(frozen=True)
class StreamConfig:
    segment_ms: float
    k: int

    def __post_init__(self):
        if self.segment_ms <= 0:
            raise ValueError("segment_ms must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")


class ModelInterface(Protocol):
    """What a session needs from a model, deterministic in its inputs."""

    def encode_prefix(self, feats: FeatureMatrix) -> CtcPosterior: ...

    def decode_next(self, feats: FeatureMatrix, emitted: Sequence[str]) -> str | None: ...


class Clock(Protocol):
    def on_read(self, chunk_ms: float) -> None: ...

    def on_emit(self) -> None: ...

    def now_ms(self) -> float: ...


class SimulatedClock:
    """Deterministic wall clock: audio plays in real time, each emitted
    token costs a fixed amount of compute."""

    def __init__(self, compute_ms_per_token: float = 0.0):
        if compute_ms_per_token < 0:
            raise ValueError("compute_ms_per_token must be non-negative")
        self.compute_ms_per_token = compute_ms_per_token
        self._now = 0.0

    def on_read(self, chunk_ms: float) -> None:
        self._now += chunk_ms

    def on_emit(self) -> None:
        self._now += self.compute_ms_per_token

    def now_ms(self) -> float:
        return self._now


class SystemClock:
    """Monotonic real time since construction; reads and emissions take
    however long they actually take."""

    def __init__(self):
        self._start = time.monotonic()

    def on_read(self, chunk_ms: float) -> None:
        pass

    def on_emit(self) -> None:
        pass

    def now_ms(self) -> float:
        return (time.monotonic() - self._start) * 1000.0


@dataclass(frozen=True)
class TraceEvent:
    token: str
    source_delay_ms: float
    wallclock_delay_ms: float


@dataclass(frozen=True)
class SimulTrace:
    """Ordered emission events of one session."""

    events: tuple[TraceEvent, ...]
    total_source_ms: float

    def __len__(self) -> int:
        return len(self.events)

    @property
    def tokens(self) -> list[str]:
        return [e.token for e in self.events]

    @property
    def text(self) -> str:
        return "".join(e.token for e in self.events).replace(WORD_MARKER, " ").strip()

    def word_delays(self) -> tuple[list[float], list[float]]:
        """(source, wallclock) delays per target word.

        Tokens group into words at marker tokens; the first token always
        opens a word. A word's delay is the delay of its opening token,
        the moment the word started to appear.
        """
        source: list[float] = []
        wallclock: list[float] = []
        for i, event in enumerate(self.events):
            if i == 0 or event.token.startswith(WORD_MARKER):
                source.append(event.source_delay_ms)
                wallclock.append(event.wallclock_delay_ms)
        return source, wallclock

    def to_json(self) -> list[dict]:
        return [
            {
                "token": e.token,
                "source_delay_ms": e.source_delay_ms,
                "wallclock_delay_ms": e.wallclock_delay_ms,
            }
            for e in self.events
        ]

    @classmethod
    def from_json(cls, payload: list[dict], total_source_ms: float) -> "SimulTrace":
        events = tuple(
            TraceEvent(
                str(entry["token"]),
                float(entry["source_delay_ms"]),
                float(entry["wallclock_delay_ms"]),
            )
            for entry in payload
        )
        return cls(events, total_source_ms)


@dataclass
class SessionState:
    consumed_ms: float = 0.0
    consumed_frames: int = 0
    detected_src_words: int = 0
    emitted_tokens: list[str] = field(default_factory=list)
    emitted_words: int = 0
    finished_source: bool = False
    finished: bool = False
    # True while a target word is mid-emission; its continuation tokens
    # bypass the wait-k gate.
    writing_word: bool = False
    events: list[TraceEvent] = field(default_factory=list)


class SessionError(RuntimeError):
    """Model failure wrapped with where the session stood."""

    def __init__(self, message: str, utterance_id: str | None, state: SessionState):
        context = (
            f"utterance={utterance_id or '<unnamed>'} "
            f"consumed={state.consumed_ms:g}ms "
            f"emitted={len(state.emitted_tokens)} tokens"
        )
        super().__init__(f"{message} ({context})")
        self.utterance_id = utterance_id


class SimulSession:
    """One utterance's READ/WRITE state machine."""

    def __init__(
        self,
        cfg: StreamConfig,
        model: ModelInterface,
        audio: FeatureMatrix,
        clock: Clock,
        utterance_id: str | None = None,
        max_tokens: int = MAX_OUTPUT_TOKENS,
    ):
        if audio.frames < 1:
            raise ValueError("audio must contain at least one frame")
        self.cfg = cfg
        self.model = model
        self.audio = audio
        self.clock = clock
        self.utterance_id = utterance_id
        self.max_tokens = max_tokens
        # Segments are whole frames; a segment shorter than one frame
        # still consumes one.
        self.chunk_frames = max(1, int(cfg.segment_ms // audio.frame_duration_ms))
        self.state = SessionState()

    def step(self) -> Action:
        st = self.state
        if st.finished:
            raise SessionError("step on a finished session", self.utterance_id, st)
        pending: str | None = None
        if st.writing_word:
            token = self._decode()
            if token is None:
                st.writing_word = False
                if st.finished_source:
                    return self._finish()
                # Nothing further decodable from this prefix; keep reading.
                return self._read()
            if not token.startswith(WORD_MARKER):
                self._emit(token)
                return Action.WRITE
            # The word in progress is complete; the peeked token starts the
            # next one, so it faces the wait-k gate. Decoding is
            # deterministic, so the peek can be reused if the gate passes.
            st.writing_word = False
            pending = token
        if st.finished_source or st.detected_src_words >= st.emitted_words + self.cfg.k:
            token = pending if pending is not None else self._decode()
            if token is None:
                return self._finish()
            self._emit(token)
            return Action.WRITE
        return self._read()

    def run(self) -> SimulTrace:
        st = self.state
        while not st.finished:
            self.step()
            if len(st.emitted_tokens) >= self.max_tokens:
                self._finish()
        return SimulTrace(tuple(st.events), self.audio.duration_ms)

    # -- internals ---------------------------------------------------------

    def _prefix(self) -> FeatureMatrix:
        return self.audio.prefix(self.state.consumed_frames)

    def _decode(self) -> str | None:
        st = self.state
        try:
            return self.model.decode_next(self._prefix(), tuple(st.emitted_tokens))
        except Exception as exc:
            raise SessionError(f"decode_next failed: {exc}", self.utterance_id, st) from exc

    def _read(self) -> Action:
        st = self.state
        upto = min(self.audio.frames, st.consumed_frames + self.chunk_frames)
        chunk_ms = (upto - st.consumed_frames) * self.audio.frame_duration_ms
        self.clock.on_read(chunk_ms)
        st.consumed_frames = upto
        st.consumed_ms = upto * self.audio.frame_duration_ms
        if upto == self.audio.frames:
            st.finished_source = True
        try:
            posterior = self.model.encode_prefix(self._prefix())
        except Exception as exc:
            raise SessionError(f"encode_prefix failed: {exc}", self.utterance_id, st) from exc
        st.detected_src_words = count_words(posterior)
        return Action.READ

    def _emit(self, token: str) -> None:
        st = self.state
        self.clock.on_emit()
        st.events.append(TraceEvent(token, st.consumed_ms, self.clock.now_ms()))
        st.emitted_tokens.append(token)
        if token.startswith(WORD_MARKER) or len(st.emitted_tokens) == 1:
            st.emitted_words += 1
        st.writing_word = True

    def _finish(self) -> Action:
        self.state.finished = True
        return Action.FINISH


def run_session(
    cfg: StreamConfig,
    model: ModelInterface,
    audio: FeatureMatrix,
    clock: Clock,
    utterance_id: str | None = None,
    max_tokens: int = MAX_OUTPUT_TOKENS,
) -> SimulTrace:
    """Drive one session to completion and return its trace."""
    return SimulSession(cfg, model, audio, clock, utterance_id, max_tokens).run()


@dataclass(frozen=True)
class SweepItem:
    """One utterance prepared for sweeping: model, audio, and reference."""

    id: str
    model: ModelInterface
    audio: FeatureMatrix
    reference: str


@dataclass(frozen=True)
class SweepRow:
    segment_ms: float
    k: int
    al_ms: float
    al_ca_ms: float
    bleu: float
    failures: tuple[str, ...] = ()


def _default_clock_factory(item: SweepItem) -> Clock:
    return SimulatedClock(getattr(item.model, "simulated_compute_ms", 0.0))


def sweep(
    cfgs: Sequence[StreamConfig],
    items: Sequence[SweepItem],
    clock_factory: Callable[[SweepItem], Clock] = _default_clock_factory,
) -> list[SweepRow]:
    """Latency/quality curve: one row per configuration over the corpus.

    Per-utterance failures (model errors, empty traces) are recorded on the
    row and the sweep continues with the remaining utterances.
    """
    from .bleu import corpus_bleu
    from .latency import average_lagging, average_lagging_ca, corpus_aggregate

    if not items:
        raise ValueError("sweep needs a non-empty corpus")
    rows: list[SweepRow] = []
    for cfg in cfgs:
        als: list[float] = []
        al_cas: list[float] = []
        hyps: list[str] = []
        refs: list[str] = []
        failures: list[str] = []
        for item in items:
            try:
                trace = run_session(cfg, item.model, item.audio, clock_factory(item), item.id)
            except SessionError as exc:
                failures.append(f"{item.id}: {exc}")
                continue
            hyps.append(trace.text)
            refs.append(item.reference)
            source, wallclock = trace.word_delays()
            if not source:
                failures.append(f"{item.id}: empty trace, no latency measurement")
                continue
            ref_len = max(1, len(item.reference.split()))
            total = trace.total_source_ms
            als.append(average_lagging(source, total, ref_len))
            al_cas.append(
                average_lagging_ca(wallclock, total, ref_len, source_delays=source)
            )
        if not als:
            raise RuntimeError(
                f"every utterance failed at segment_ms={cfg.segment_ms:g} k={cfg.k}: "
                + "; ".join(failures)
            )
        rows.append(
            SweepRow(
                segment_ms=cfg.segment_ms,
                k=cfg.k,
                al_ms=corpus_aggregate(als),
                al_ca_ms=corpus_aggregate(al_cas),
                bleu=corpus_bleu(hyps, refs).score,
                failures=tuple(failures),
            )
        )
    return rows


def save_trace(trace: SimulTrace, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(trace.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_trace(path: str | Path, total_source_ms: float) -> SimulTrace:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return SimulTrace.from_json(payload, total_source_ms)
