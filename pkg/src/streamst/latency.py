"""Average Lagging and its computation-aware variant.

AL compares each emission delay against an ideal oracle that paces the
reference translation uniformly over the source duration:

    AL = (1/tau) * sum_{i=1..tau} [ d_i - (i - 1) * T / ref_len ]

where d_i is the source time (ms) consumed when target word i was emitted,
T the total source duration, ref_len the reference word count, and tau the
index of the first emission at full source consumption (all of the
remaining words are free, so they are excluded). The computation-aware
variant applies the same formula to wall-clock delays, truncating at the
tau derived from the source delays so that both metrics cover the same
emissions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

__all__ = [
    "Regime",
    "LatencyReport",
    "average_lagging",
    "average_lagging_ca",
    "classify_regime",
    "corpus_aggregate",
]


class Regime(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    ABOVE_HIGH = "above_high"


# Inclusive upper bounds, ms.
REGIME_BOUNDS = ((Regime.LOW, 1000.0), (Regime.MEDIUM, 2000.0), (Regime.HIGH, 4000.0))


@dataclass(frozen=True)
class LatencyReport:
    al_ms: float
    al_ca_ms: float
    regime: Regime
    n_utterances: int


def _oracle_cutoff(delays: Sequence[float], total_ms: float) -> int:
    """1-based index of the first delay equal to the full duration."""
    for i, d in enumerate(delays, start=1):
        if d == total_ms:
            return i
    return len(delays)


def average_lagging(
    delays: Sequence[float],
    total_ms: float,
    ref_len: int,
    pace_by_hypothesis: bool = False,
) -> float:
    """Average Lagging over per-word source delays.

    The oracle paces the reference translation by default; published
    variants disagree on this, so `pace_by_hypothesis=True` switches the
    pacing length to the hypothesis word count. Negative results are legal
    and reported as-is (anticipatory output).
    """
    if not delays:
        raise ValueError("empty delays")
    if ref_len < 1:
        raise ValueError("ref_len must be >= 1")
    for d in delays:
        if d > total_ms:
            raise ValueError(f"delay exceeds duration ({d} > {total_ms})")
    pace_len = len(delays) if pace_by_hypothesis else ref_len
    return _lagging(delays, total_ms, pace_len, tau=_oracle_cutoff(delays, total_ms))


def average_lagging_ca(
    delays: Sequence[float],
    total_ms: float,
    ref_len: int,
    source_delays: Sequence[float] | None = None,
    pace_by_hypothesis: bool = False,
) -> float:
    """Computation-aware Average Lagging over wall-clock delays.

    Wall-clock delays may exceed the source duration (model compute time).
    When the underlying source delays are supplied, the cutoff tau is taken
    from them so that AL and AL_CA truncate at the same emission.
    """
    if not delays:
        raise ValueError("empty delays")
    if ref_len < 1:
        raise ValueError("ref_len must be >= 1")
    if source_delays is not None:
        if len(source_delays) != len(delays):
            raise ValueError("source_delays must align with delays")
        tau = _oracle_cutoff(source_delays, total_ms)
    else:
        tau = _oracle_cutoff(delays, total_ms)
    pace_len = len(delays) if pace_by_hypothesis else ref_len
    return _lagging(delays, total_ms, pace_len, tau=tau)


def _lagging(delays: Sequence[float], total_ms: float, pace_len: int, tau: int) -> float:
    oracle_step = total_ms / pace_len
    return sum(delays[i] - i * oracle_step for i in range(tau)) / tau


def classify_regime(al_ms: float) -> Regime:
    """Lowest latency bucket containing the value (bounds inclusive)."""
    for regime, bound in REGIME_BOUNDS:
        if al_ms <= bound:
            return regime
    return Regime.ABOVE_HIGH


def corpus_aggregate(per_utterance: Sequence[float]) -> float:
    """Unweighted mean over utterances."""
    if not per_utterance:
        raise ValueError("no utterance values to aggregate")
    return sum(per_utterance) / len(per_utterance)
