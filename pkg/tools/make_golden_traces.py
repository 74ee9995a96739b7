#!/usr/bin/env python3
"""Generate golden wait-k traces by straight-line simulation of the scripts.

Deliberately independent of the package: no imports from it, no CTC, no
posterior construction. Word detection is read directly off the scripted
boundary times, decoding directly off the scripted token lists, and the
clock is plain arithmetic (wall advances by each consumed chunk, plus the
scripted per-token compute cost at every emission). The test suite demands
bit-identical JSON from the real engine, whose detection path runs through
feature prefixes, near-one-hot posteriors, greedy decoding, and collapse.

Policy semantics simulated:
  - READ consumes min(segment_ms, remaining) of audio; a word counts as
    detected once its end time has been consumed.
  - A target word may start only when detected >= emitted_words + k, or the
    source is exhausted; its continuation (unmarked) tokens follow freely.
  - Tokens come from the concatenation of the targets of detected words;
    when that runs dry mid-stream the session reads on, and when it runs
    dry after source exhaustion the session finishes.

Run from the repository root:  python3 tools/make_golden_traces.py
"""

import json
from pathlib import Path

SCRIPTS = Path("src/streamst/toy_scripts")
OUT = Path("tests/golden/traces")

SEGMENTS = (320.0, 640.0)
KS = (1, 3, 7)

MARKER = "▁"


def simulate(script: dict, segment_ms: float, k: int) -> list[dict]:
    total = float(script["total_ms"])
    compute = float(script["compute_ms"])
    ends = [float(w["end_ms"]) for w in script["words"]]
    stream = [t for w in script["words"] for t in w["targets"]]
    # tokens available once `consumed` ms are heard
    token_end = [end for w, end in zip(script["words"], ends) for _ in w["targets"]]

    consumed = 0.0
    wall = 0.0
    detected = 0
    emitted = 0
    emitted_words = 0
    finished = False
    writing = False
    events = []

    def next_token():
        if emitted < len(stream) and token_end[emitted] <= consumed:
            return stream[emitted]
        return None

    def emit(tok):
        nonlocal wall, emitted, emitted_words, writing
        wall += compute
        events.append(
            {"token": tok, "source_delay_ms": consumed, "wallclock_delay_ms": wall}
        )
        emitted += 1
        if tok.startswith(MARKER) or emitted == 1:
            emitted_words += 1
        writing = True

    def read():
        nonlocal consumed, wall, detected, finished
        chunk = min(segment_ms, total - consumed)
        wall += chunk
        consumed += chunk
        finished = consumed >= total
        detected = sum(1 for e in ends if e <= consumed)

    while True:
        pending = None
        if writing:
            tok = next_token()
            if tok is None:
                writing = False
                if finished:
                    break
                read()
                continue
            if not tok.startswith(MARKER):
                emit(tok)
                continue
            writing = False
            pending = tok
        if finished or detected >= emitted_words + k:
            tok = pending if pending is not None else next_token()
            if tok is None:
                break
            emit(tok)
            continue
        read()

    return events


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    n = 0
    for name in ("short", "medium", "long"):
        script = json.loads((SCRIPTS / f"{name}.json").read_text(encoding="utf-8"))
        for segment_ms in SEGMENTS:
            for k in KS:
                events = simulate(script, segment_ms, k)
                path = OUT / f"{script['id']}_s{segment_ms:g}_k{k}.json"
                path.write_text(
                    json.dumps(events, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8",
                )
                n += 1
    print(f"wrote {n} golden traces to {OUT}")


if __name__ == "__main__":
    main()
