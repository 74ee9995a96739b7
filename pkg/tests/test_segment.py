"""Divide-and-conquer and hybrid segmentation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamst.features import FeatureMatrix, write_features
from streamst.segment import (
    Segment,
    SegmentationConfig,
    SegmentManifest,
    SplitProbabilities,
    dnc_split,
    hybrid_split,
    load_manifest,
    load_split_probabilities,
    manifest_from_json,
    manifest_to_json,
    save_manifest,
    validate_manifest,
)


def probs(values, frame_ms=10.0):
    return SplitProbabilities(np.asarray(values, dtype=np.float64), frame_ms)


def uniform(frames, p=0.5, frame_ms=10.0):
    return probs(np.full(frames, p), frame_ms)


# ---------------------------------------------------------------------------
# dnc_split
# ---------------------------------------------------------------------------


def test_dnc_short_input_is_one_segment():
    manifest = dnc_split(uniform(100), SegmentationConfig(max_segment_ms=2000))
    assert manifest.segments == (Segment(0.0, 1000.0),)
    assert manifest.warnings == ()


def test_dnc_cuts_at_probability_peak():
    # 20 s of audio, cap 12 s, single sharp peak at 9 s: one cut there
    values = np.zeros(2000)
    values[900] = 1.0
    manifest = dnc_split(probs(values), SegmentationConfig(max_segment_ms=12_000))
    assert manifest.segments == (Segment(0.0, 9000.0), Segment(9000.0, 20_000.0))


def test_dnc_boundary_frame_opens_right_segment():
    values = np.zeros(10)
    values[4] = 0.9
    manifest = dnc_split(probs(values), SegmentationConfig(max_segment_ms=80))
    assert manifest.segments[0] == Segment(0.0, 40.0)
    assert manifest.segments[1].start_ms == 40.0


def test_dnc_tie_breaks_to_lowest_frame():
    manifest = dnc_split(uniform(10), SegmentationConfig(max_segment_ms=80))
    # all probabilities equal: the first feasible cut frame wins
    assert manifest.segments[0] == Segment(0.0, 10.0)


def test_dnc_respects_min_segment_length():
    values = np.zeros(100)
    values[1] = 1.0  # peak too close to the left edge to honor the minimum
    values[50] = 0.8
    cfg = SegmentationConfig(max_segment_ms=600, min_segment_ms=200)
    manifest = dnc_split(probs(values), cfg)
    for seg in manifest.segments:
        assert seg.duration_ms >= 200.0
    assert not validate_manifest(manifest, 1000.0)


def test_dnc_min_infeasible_falls_back_to_midpoint():
    # 3 frames over the cap, minimum longer than any possible half
    cfg = SegmentationConfig(max_segment_ms=25, min_segment_ms=20)
    manifest = dnc_split(uniform(3), cfg)
    assert len(manifest.warnings) >= 1
    assert "midpoint" in manifest.warnings[0]
    assert not validate_manifest(manifest, 30.0)


def test_dnc_single_oversize_frame_emitted_with_warning():
    manifest = dnc_split(uniform(1), SegmentationConfig(max_segment_ms=5))
    assert manifest.segments == (Segment(0.0, 10.0),)
    assert "no interior frame" in manifest.warnings[0]


def test_dnc_recurses_into_both_halves():
    manifest = dnc_split(uniform(40), SegmentationConfig(max_segment_ms=90))
    assert not validate_manifest(manifest, 400.0)
    assert all(seg.duration_ms <= 90.0 for seg in manifest.segments)
    # segments come out in temporal order
    starts = [seg.start_ms for seg in manifest.segments]
    assert starts == sorted(starts)


@given(
    st.integers(2, 120),
    st.integers(2, 30),
    st.integers(0, 4),
)
@settings(max_examples=200, deadline=None)
def test_dnc_output_always_valid_and_bounded(frames, max_frames, seed):
    rng = np.random.default_rng(seed)
    p = SplitProbabilities(rng.uniform(size=frames))
    cfg = SegmentationConfig(max_segment_ms=max_frames * 10.0)
    manifest = dnc_split(p, cfg)
    assert validate_manifest(manifest, frames * 10.0) == []
    if not manifest.warnings:
        assert all(seg.duration_ms <= cfg.max_segment_ms for seg in manifest.segments)


@given(st.integers(4, 80), st.integers(1, 6), st.integers(0, 3))
@settings(max_examples=120, deadline=None)
def test_dnc_monotone_in_max_length(frames, bump, seed):
    # loosening the cap never makes a previously emitted boundary invalid:
    # boundaries of the looser split are a subset of the tighter split's
    rng = np.random.default_rng(seed + 100)
    p = SplitProbabilities(rng.uniform(size=frames))
    tight = dnc_split(p, SegmentationConfig(max_segment_ms=50.0))
    loose = dnc_split(p, SegmentationConfig(max_segment_ms=50.0 + bump * 10.0))
    tight_bounds = {seg.start_ms for seg in tight.segments}
    loose_bounds = {seg.start_ms for seg in loose.segments}
    assert loose_bounds <= tight_bounds


# ---------------------------------------------------------------------------
# hybrid_split
# ---------------------------------------------------------------------------


def test_hybrid_cuts_at_energy_dip():
    # dip at 4 s inside the [2 s, 6 s] window from the start
    energy = np.ones(1000)
    energy[400] = 0.0
    cfg = SegmentationConfig(max_segment_ms=6000, min_segment_ms=2000)
    manifest = hybrid_split(energy, cfg)
    assert manifest.segments[0] == Segment(0.0, 4000.0)
    assert not validate_manifest(manifest, 10_000.0)


def test_hybrid_constant_energy_cuts_at_window_end():
    # ties go to the latest frame: constant energy yields maximal segments
    energy = np.ones(1000)
    cfg = SegmentationConfig(max_segment_ms=6000, min_segment_ms=2000)
    manifest = hybrid_split(energy, cfg)
    assert manifest.segments[0] == Segment(0.0, 6000.0)
    assert manifest.segments[1].start_ms == 6000.0


def test_hybrid_short_input_single_segment():
    manifest = hybrid_split(np.ones(100), SegmentationConfig(max_segment_ms=2000))
    assert manifest.segments == (Segment(0.0, 1000.0),)


def test_hybrid_min_window_respected():
    energy = np.ones(900)
    energy[50] = 0.0  # dip before min_segment_ms: not a candidate
    energy[350] = 0.1
    cfg = SegmentationConfig(max_segment_ms=4000, min_segment_ms=1000)
    manifest = hybrid_split(energy, cfg)
    assert manifest.segments[0] == Segment(0.0, 3500.0)


def test_hybrid_infeasible_window_warns():
    # min rounds up to frame 5, max rounds down to frame 4: no legal cut
    energy = np.ones(10)
    cfg = SegmentationConfig(max_segment_ms=48, min_segment_ms=45)
    manifest = hybrid_split(energy, cfg, frame_duration_ms=10.0)
    assert not validate_manifest(manifest, 100.0)
    assert len(manifest.warnings) >= 1
    assert "window" in manifest.warnings[0]


@given(st.integers(2, 150), st.integers(2, 30), st.integers(0, 4))
@settings(max_examples=150, deadline=None)
def test_hybrid_output_always_valid(frames, max_frames, seed):
    rng = np.random.default_rng(seed + 7)
    energy = rng.uniform(size=frames)
    cfg = SegmentationConfig(max_segment_ms=max_frames * 10.0)
    manifest = hybrid_split(energy, cfg)
    assert validate_manifest(manifest, frames * 10.0) == []
    if not manifest.warnings:
        assert all(seg.duration_ms <= cfg.max_segment_ms for seg in manifest.segments)


# ---------------------------------------------------------------------------
# validation and serialization
# ---------------------------------------------------------------------------


def test_validate_flags_gap_overlap_and_bounds():
    manifest = SegmentManifest(
        100.0,
        (Segment(10.0, 30.0), Segment(40.0, 60.0), Segment(50.0, 90.0)),
    )
    problems = validate_manifest(manifest, 100.0)
    assert any("starts at 10" in p for p in problems)
    assert any("gap at 30" in p for p in problems)
    assert any("overlap at 50" in p for p in problems)
    assert any("ends at 90" in p for p in problems)


def test_validate_flags_empty_and_reversed():
    assert validate_manifest(SegmentManifest(50.0, ()), 50.0) == [
        "empty manifest for 50 ms of audio"
    ]
    manifest = SegmentManifest(50.0, (Segment(0.0, 0.0), Segment(0.0, 50.0)))
    problems = validate_manifest(manifest, 50.0)
    assert any("empty or reversed" in p for p in problems)


def test_validate_accepts_well_formed():
    manifest = SegmentManifest(60.0, (Segment(0.0, 25.0), Segment(25.0, 60.0)))
    assert validate_manifest(manifest, 60.0) == []


def test_manifest_json_round_trip(tmp_path):
    manifest = SegmentManifest(
        120.0, (Segment(0.0, 70.0), Segment(70.0, 120.0)), ("note",)
    )
    payload = manifest_to_json(manifest)
    assert payload["segments"][1] == {"start_ms": 70.0, "end_ms": 120.0}
    assert manifest_from_json(payload) == manifest
    path = tmp_path / "m.json"
    save_manifest(manifest, path)
    assert load_manifest(path) == manifest


def test_load_split_probabilities_from_container(tmp_path):
    values = np.linspace(0.0, 1.0, 50).reshape(-1, 1)
    path = tmp_path / "p.bin"
    write_features(path, FeatureMatrix(values))
    loaded = load_split_probabilities(path)
    assert loaded.frames == 50
    assert loaded.total_ms == pytest.approx(500.0)
    np.testing.assert_allclose(loaded.values, values[:, 0], atol=1e-7)


def test_load_split_probabilities_rejects_multicolumn(tmp_path):
    path = tmp_path / "bad.bin"
    write_features(path, FeatureMatrix(np.zeros((5, 3))))
    with pytest.raises(ValueError, match="single probability column"):
        load_split_probabilities(path)


def test_split_probabilities_validation():
    with pytest.raises(ValueError, match="1-D"):
        SplitProbabilities(np.zeros((3, 2)))
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        SplitProbabilities(np.array([0.5, 1.5]))
    with pytest.raises(ValueError):
        SegmentationConfig(max_segment_ms=100, min_segment_ms=100)
