"""Scripted toy model: exact reveal times, posteriors, and decoding."""

import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamst.ctc import collapse, count_words, greedy_labels
from streamst.features import FeatureMatrix
from streamst.toy import (
    PEAK_PROBABILITY,
    Script,
    ScriptWord,
    ToyModel,
    detokenize,
    load_script,
    load_script_bank,
)


def demo_script(compute_ms=0.0):
    return Script(
        id="demo",
        total_ms=1000.0,
        words=(
            ScriptWord("one", 300.0, ("▁eins",)),
            ScriptWord("two", 700.0, ("▁zw", "ei")),
            ScriptWord("three", 1000.0, ("▁drei",)),
        ),
        compute_ms=compute_ms,
    )


def script_path(name):
    return resources.files("streamst") / "toy_scripts" / f"{name}.json"


# ---------------------------------------------------------------------------
# script validation
# ---------------------------------------------------------------------------


def test_reveal_counts_step_at_word_ends():
    script = demo_script()
    assert script.revealed_words(0.0) == 0
    assert script.revealed_words(299.0) == 0
    assert script.revealed_words(300.0) == 1
    assert script.revealed_words(699.9) == 1
    assert script.revealed_words(700.0) == 2
    assert script.revealed_words(1000.0) == 3


def test_script_views():
    script = demo_script()
    assert script.frames == 100
    assert script.transcript == "one two three"
    assert script.target_tokens == ("▁eins", "▁zw", "ei", "▁drei")
    assert script.translation == "eins zwei drei"
    vocab = script.vocabulary
    assert vocab.size == 4
    assert vocab.tokens == ("<blank>", "one", "two", "three")
    assert vocab.begins_word == (False, True, True, True)


def test_script_rejects_off_grid_end_time():
    with pytest.raises(ValueError, match="multiple of frame_ms"):
        Script(
            id="x",
            total_ms=1000.0,
            words=(ScriptWord("w", 305.0, ("▁a",)),),
        )


def test_script_rejects_unordered_words():
    with pytest.raises(ValueError, match="strictly increasing"):
        Script(
            id="x",
            total_ms=1000.0,
            words=(
                ScriptWord("a", 500.0, ("▁a",)),
                ScriptWord("b", 500.0, ("▁b",)),
            ),
        )


def test_script_rejects_word_past_total():
    with pytest.raises(ValueError, match="after total_ms"):
        Script(id="x", total_ms=400.0, words=(ScriptWord("a", 500.0, ("▁a",)),))


def test_script_json_round_trip():
    script = demo_script(compute_ms=25.0)
    again = Script.from_json(script.to_json())
    assert again == script


def test_detokenize():
    assert detokenize(("▁guten", "▁tag")) == "guten tag"
    assert detokenize(("▁über", "setz", "ung")) == "übersetzung"
    assert detokenize(()) == ""


# ---------------------------------------------------------------------------
# model contract
# ---------------------------------------------------------------------------


def test_features_cover_all_frames():
    model = ToyModel(demo_script())
    feats = model.make_features()
    assert feats.frames == 100
    assert feats.dim == 4
    assert feats.duration_ms == pytest.approx(1000.0)


def test_posterior_rows_are_near_one_hot():
    model = ToyModel(demo_script())
    post = model.encode_prefix(model.make_features().prefix(30))
    probs = np.exp(post.logprobs)
    assert probs.shape == (30, 4)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert probs.max(axis=1).min() == pytest.approx(PEAK_PROBABILITY)


def test_word_count_tracks_reveals_exactly():
    model = ToyModel(demo_script())
    feats = model.make_features()
    for frames, expected in [(0, 0), (29, 0), (30, 1), (69, 1), (70, 2), (100, 3)]:
        if frames == 0:
            continue  # empty posteriors are rejected by the CTC layer
        post = model.encode_prefix(feats.prefix(frames))
        assert count_words(post) == expected


def test_greedy_collapse_recovers_word_labels():
    model = ToyModel(demo_script())
    post = model.encode_prefix(model.make_features())
    assert collapse(greedy_labels(post)) == [1, 2, 3]


def test_prefix_extension_never_loses_words():
    model = ToyModel(demo_script())
    feats = model.make_features()
    counts = [count_words(model.encode_prefix(feats.prefix(n))) for n in range(1, 101)]
    assert counts == sorted(counts)
    assert counts[-1] == 3


def test_encode_rejects_overlong_prefix():
    model = ToyModel(demo_script())
    with pytest.raises(ValueError, match="exceeds the scripted utterance"):
        model.encode_prefix(FeatureMatrix(np.zeros((101, 4))))


def test_decode_walks_available_targets():
    model = ToyModel(demo_script())
    feats = model.make_features()
    # nothing revealed yet
    assert model.decode_next(feats.prefix(29), []) is None
    # first word revealed
    assert model.decode_next(feats.prefix(30), []) == "▁eins"
    assert model.decode_next(feats.prefix(30), ["▁eins"]) is None
    # two words revealed: the second word's two tokens come out in order
    assert model.decode_next(feats.prefix(70), ["▁eins"]) == "▁zw"
    assert model.decode_next(feats.prefix(70), ["▁eins", "▁zw"]) == "ei"
    assert model.decode_next(feats.prefix(70), ["▁eins", "▁zw", "ei"]) is None
    # full source: everything available
    assert model.decode_next(feats, ["▁eins", "▁zw", "ei"]) == "▁drei"
    assert model.decode_next(feats, list(model.script.target_tokens)) is None


@given(st.integers(1, 100), st.integers(0, 4))
@settings(max_examples=80, deadline=None)
def test_decode_consistent_with_reveals(frames, n_emitted):
    script = demo_script()
    model = ToyModel(script)
    feats = model.make_features().prefix(frames)
    revealed = script.revealed_words(frames * 10.0)
    available = [t for w in script.words[:revealed] for t in w.targets]
    emitted = available[:n_emitted]
    nxt = model.decode_next(feats, emitted)
    if len(emitted) < len(available):
        assert nxt == available[len(emitted)]
    else:
        assert nxt is None


# ---------------------------------------------------------------------------
# bundled scripts
# ---------------------------------------------------------------------------


def test_bundled_scripts_load_and_validate():
    for name, n_words in [("short", 3), ("medium", 6), ("long", 10)]:
        script = load_script(script_path(name))
        assert script.id == f"toy-{name}"
        assert len(script.words) == n_words
        assert script.words[-1].end_ms <= script.total_ms


def test_bundled_bank_matches_single_files():
    bank = load_script_bank(script_path("bank"))
    assert set(bank) == {"toy-short", "toy-medium", "toy-long"}
    assert bank["toy-short"] == load_script(script_path("short"))


def test_load_script_bank_accepts_all_shapes(tmp_path):
    script = demo_script()
    single = tmp_path / "one.json"
    single.write_text(json.dumps(script.to_json()), encoding="utf-8")
    assert set(load_script_bank(single)) == {"demo"}

    as_list = tmp_path / "list.json"
    as_list.write_text(json.dumps([script.to_json()]), encoding="utf-8")
    assert set(load_script_bank(as_list)) == {"demo"}


def test_load_script_bank_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.json"
    payload = [demo_script().to_json(), demo_script().to_json()]
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate"):
        load_script_bank(path)


def test_load_script_rejects_non_script(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"foo": 1}), encoding="utf-8")
    with pytest.raises(ValueError, match="script object"):
        load_script(path)


def test_long_script_carries_compute_budget():
    script = load_script(script_path("long"))
    assert script.compute_ms == 50.0
    assert ToyModel(script).simulated_compute_ms == 50.0
