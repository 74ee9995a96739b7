"""Average lagging, its computation-aware variant, and regime classification."""

import pytest
from hypothesis import given, settings, strategies as st

from streamst.latency import (
    LatencyReport,
    Regime,
    average_lagging,
    average_lagging_ca,
    classify_regime,
    corpus_aggregate,
)


# ---------------------------------------------------------------------------
# average lagging hand cases
# ---------------------------------------------------------------------------


def test_single_word_emitted_at_the_end():
    # d_1 = T = 3000, ref_len 1: oracle term is 0, so AL = 3000
    assert average_lagging([3000.0], 3000.0, 1) == pytest.approx(3000.0)


def test_perfectly_paced_hypothesis():
    # one word per second against a 3 s source with a 3-word reference:
    # every term is 1000 - (i-1)*1000, averaged over all three words
    assert average_lagging([1000.0, 2000.0, 3000.0], 3000.0, 3) == pytest.approx(1000.0)


def test_negative_lagging_when_ahead_of_oracle():
    # both words at 0 ms, oracle expects 0 and 1000: mean(0 - 0, 0 - 1000)
    assert average_lagging([0.0, 0.0], 2000.0, 2) == pytest.approx(-500.0)


def test_cutoff_at_first_full_source_delay():
    # second word already waited for the full source: terms after it are dropped
    delays = [1000.0, 4000.0, 4000.0]
    expected = ((1000 - 0) + (4000 - 4000 / 3)) / 2
    assert average_lagging(delays, 4000.0, 3) == pytest.approx(expected)


def test_pace_by_hypothesis_flag():
    delays = [1000.0, 2000.0]
    # reference pacing: T/ref_len = 500; hypothesis pacing: T/len(delays) = 1000
    by_ref = average_lagging(delays, 2000.0, 4)
    by_hyp = average_lagging(delays, 2000.0, 4, pace_by_hypothesis=True)
    assert by_ref == pytest.approx(((1000 - 0) + (2000 - 500)) / 2)
    assert by_hyp == pytest.approx(((1000 - 0) + (2000 - 1000)) / 2)


def test_average_lagging_errors():
    with pytest.raises(ValueError, match="empty delays"):
        average_lagging([], 1000.0, 1)
    with pytest.raises(ValueError, match="ref_len"):
        average_lagging([500.0], 1000.0, 0)
    with pytest.raises(ValueError, match="exceeds duration"):
        average_lagging([1500.0], 1000.0, 1)


# ---------------------------------------------------------------------------
# computation-aware variant
# ---------------------------------------------------------------------------


def test_ca_hand_case():
    # wallclock delays 1300/2600/3900 over a 3 s source, 3-word reference:
    # mean of 1300, 2600-1000, 3900-2000
    al_ca = average_lagging_ca([1300.0, 2600.0, 3900.0], 3000.0, 3)
    assert al_ca == pytest.approx(1600.0)


def test_ca_equals_al_for_zero_compute():
    delays = [600.0, 1400.0, 2000.0]
    al = average_lagging(delays, 2000.0, 3)
    al_ca = average_lagging_ca(delays, 2000.0, 3, source_delays=delays)
    assert al_ca == pytest.approx(al, abs=1e-9)


def test_ca_cutoff_uses_source_delays():
    # wallclock values exceed T; the cutoff comes from the source-time delays
    source = [1000.0, 2000.0, 2000.0]
    wall = [1100.0, 2300.0, 2450.0]
    al_ca = average_lagging_ca(wall, 2000.0, 3, source_delays=source)
    # tau = 2 (source delay hits T at the second word)
    expected = ((1100 - 0) + (2300 - 2000 / 3)) / 2
    assert al_ca == pytest.approx(expected)


def test_ca_allows_delays_beyond_duration():
    # compute time pushes wallclock past the source length; no error
    assert average_lagging_ca([3500.0], 3000.0, 1) == pytest.approx(3500.0)


def test_ca_source_delay_length_mismatch():
    with pytest.raises(ValueError, match="source_delays"):
        average_lagging_ca([100.0, 200.0], 1000.0, 2, source_delays=[100.0])


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


@given(
    st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=10),
    st.floats(100, 10_000, allow_nan=False),
    st.integers(1, 12),
    st.floats(-2000, 2000, allow_nan=False),
)
@settings(max_examples=120, deadline=None)
def test_translation_by_constant_shifts_al(fracs, total_ms, ref_len, shift):
    # strictly below T so the cutoff stays at the full length under the shift
    delays = sorted(f * total_ms * 0.9 for f in fracs)
    base = average_lagging(delays, total_ms, ref_len)
    shifted = [d + shift for d in delays]
    moved = average_lagging_ca(shifted, total_ms, ref_len, source_delays=delays)
    assert moved == pytest.approx(base + shift, abs=1e-6)


@given(
    st.lists(st.floats(0, 5000, allow_nan=False), min_size=1, max_size=10),
    st.integers(1, 12),
)
@settings(max_examples=120, deadline=None)
def test_al_of_monotone_delays_is_finite(delays, ref_len):
    delays = sorted(min(d, 5000.0) for d in delays)
    value = average_lagging(delays, 5000.0, ref_len)
    assert value == value  # not NaN
    # each term lies in [-(n-1)*T, T] since 0 <= d_i <= T and pace <= T
    assert -(len(delays) - 1) * 5000.0 - 1e-9 <= value <= 5000.0 + 1e-9


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


def test_regime_boundaries_inclusive():
    assert classify_regime(1000.0) is Regime.LOW
    assert classify_regime(1000.1) is Regime.MEDIUM
    assert classify_regime(2000.0) is Regime.MEDIUM
    assert classify_regime(2000.1) is Regime.HIGH
    assert classify_regime(4000.0) is Regime.HIGH
    assert classify_regime(4000.1) is Regime.ABOVE_HIGH


def test_regime_of_negative_lagging_is_low():
    assert classify_regime(-500.0) is Regime.LOW


def test_regime_values_serialize():
    assert Regime.LOW.value == "low"
    assert Regime.ABOVE_HIGH.value == "above_high"


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def test_corpus_aggregate_mean():
    assert corpus_aggregate([500.0, 1500.0]) == pytest.approx(1000.0)
    assert corpus_aggregate([-200.0, 200.0]) == pytest.approx(0.0)


def test_corpus_aggregate_empty_rejected():
    with pytest.raises(ValueError, match="aggregate"):
        corpus_aggregate([])


def test_latency_report_carries_regime_of_al():
    al = corpus_aggregate([2500.0, 3500.0])
    report = LatencyReport(
        al_ms=al,
        al_ca_ms=corpus_aggregate([9000.0, 9000.0]),
        regime=classify_regime(al),
        n_utterances=2,
    )
    assert report.regime is Regime.HIGH
    assert report.n_utterances == 2
