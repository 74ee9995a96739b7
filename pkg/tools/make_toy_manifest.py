#!/usr/bin/env python3
"""Generate the bundled 200-record toy manifest and its golden filter report.

Every record is constructed to land in a known filter category, and the
golden report is tallied from that construction plan, not from the filter
implementation, so the test comparing the two is a real oracle. Texts have
exact character counts: transcripts are always 10 characters, so a
translation of L characters has char ratio L/10 exactly.

Layout (200 rows):
  160 kept        ratio in [0.8, 1.6]; some with nll <= 4.0, one exactly 4.0
   13 char_ratio  ratio <= 0.7 (four also carry nll > 4 to pin attribution order)
   12 char_ratio  ratio >= 1.7 (three also carry nll > 4)
   12 nll         ratio valid but nll > 4.0
    3 invalid     malformed rows (column count, non-integer frames, bad origin)

Run from the repository root:  python3 tools/make_toy_manifest.py
"""

import json
import random
from pathlib import Path

LETTERS = "abcdefghijklmnopqrstuvwxyz"

MANIFEST = Path("src/streamst/data/toy_manifest.tsv")
REPORT = Path("tests/golden/filter_report.json")


def text(n: int, phase: int) -> str:
    s = "".join(LETTERS[(phase + i) % 26] for i in range(n))
    if n >= 7:
        s = s[:3] + " " + s[4:]  # interior space; outer strip() keeps length
    assert len(s) == n and s == s.strip()
    return s


def main() -> None:
    rows = []  # (category, tsv-line) pairs, category None for invalid rows
    counters = {"kept": 0, "char_ratio": 0, "nll": 0, "invalid": 0}

    def add(category, rec_id, frames, src_len, tgt_len, nll, origin, phase):
        src = text(src_len, phase)
        tgt = text(tgt_len, phase + 7)
        nll_field = "" if nll is None else format(nll, "g")
        rows.append((category, f"{rec_id}\t{frames}\t{src}\t{tgt}\t{nll_field}\t{origin}"))
        counters[category] += 1

    n = 0

    def next_id():
        nonlocal n
        n += 1
        return f"utt-{n:04d}"

    # 156 plain kept rows; lengths cycle over the full inclusive range.
    for i in range(156):
        tgt_len = 8 + i % 9  # 8..16 -> ratio 0.8..1.6
        nll = None if i % 4 else 0.5 + (i // 4) % 8 * 0.5  # 0.5..4.0, all passing
        origin = "synthetic" if i % 3 == 0 else "native"
        add("kept", next_id(), 100 + (i * 37) % 900, 10, tgt_len, nll, origin, i)
    # 4 named boundary rows, all kept.
    add("kept", "edge-ratio-lo", 500, 10, 8, None, "native", 3)  # ratio exactly 0.8
    add("kept", "edge-ratio-hi", 500, 10, 16, None, "native", 5)  # ratio exactly 1.6
    add("kept", "edge-nll-max", 500, 10, 12, 4.0, "native", 7)  # nll exactly at threshold
    add("kept", "edge-no-nll", 500, 10, 12, None, "synthetic", 9)

    # 13 low-ratio rejects; the last four also have failing nll, but the
    # ratio rule is attributed first.
    for i in range(13):
        nll = 9.0 if i >= 9 else None
        add("char_ratio", next_id(), 100 + i * 11, 10, 1 + i % 7, nll, "native", i)

    # 12 high-ratio rejects; three carry failing nll, same attribution.
    for i in range(12):
        nll = 8.8 if i < 3 else None
        add("char_ratio", next_id(), 150 + i * 13, 10, 17 + i % 9, nll, "synthetic", i)

    # 12 nll rejects with valid ratios.
    for i in range(12):
        add("nll", next_id(), 200 + i * 17, 10, 9 + i % 7, 4.1 + i * 0.3, "native", i)

    # 3 malformed rows.
    rows.append((None, "bad-columns\t100\tonly four fields\tx"))
    rows.append((None, "bad-frames\tNaNN\tzehn zeichen\tzehn zeichen\t\tnative"))
    rows.append((None, "bad-origin\t100\tzehn zeichen\tzehn zeichen\t\tmartian"))
    counters["invalid"] += 3

    assert len(rows) == 200, len(rows)
    assert counters == {"kept": 160, "char_ratio": 25, "nll": 12, "invalid": 3}

    random.Random(20220517).shuffle(rows)
    header = "id\taudio_frames\ttranscript\ttranslation\tnll\torigin"
    MANIFEST.write_text(
        "\n".join([header] + [line for _, line in rows]) + "\n", encoding="utf-8"
    )

    report = {
        "total": 200,
        "kept": counters["kept"],
        "rejected": {
            "char_ratio": counters["char_ratio"],
            "chars_per_frame": 0,
            "nll": counters["nll"],
        },
        "invalid": counters["invalid"],
    }
    REPORT.parent.mkdir(parents=True, exist_ok=True)
    REPORT.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {MANIFEST} and {REPORT}")


if __name__ == "__main__":
    main()
