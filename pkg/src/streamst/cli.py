"""Command-line front end.

One binary, eight subcommands: `filter`, `histogram`, `segment`,
`simulate`, `sweep`, `evaluate`, `bleu`, `ctc`. Exit codes: 0 success,
1 usage error, 2 data error. Relative output paths resolve under
$STREAMST_OUT_DIR when that is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import random
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bleu import SIGNATURE, corpus_bleu
from .corpus import (
    FilterConfig,
    apply_filters,
    build_histogram,
    char_ratio,
    chars_per_frame,
    read_manifest,
    write_manifest,
    CorpusRecord,
    InvalidRecord,
)
from .ctc import (
    CtcPosterior,
    Vocabulary,
    collapse,
    count_words,
    ctc_compress,
    greedy_labels,
    max_output_length_merge,
)
from .features import read_features
from .latency import (
    average_lagging,
    average_lagging_ca,
    classify_regime,
    corpus_aggregate,
)
from .policy import SimulatedClock, StreamConfig, SweepItem, run_session, sweep
from .segment import (
    SegmentationConfig,
    dnc_split,
    hybrid_split,
    load_split_probabilities,
    manifest_to_json,
)
from .toy import ToyModel, load_script_bank

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

log = logging.getLogger("streamst")


class DataError(Exception):
    """Bad or missing input data (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for data
    # errors and uses 1 for usage.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_path(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get("STREAMST_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _read_records(path: str, strict: bool) -> list[CorpusRecord]:
    """Manifest records; invalid rows either abort (strict) or are dropped."""
    try:
        rows = list(read_manifest(path))
    except FileNotFoundError:
        raise DataError(f"manifest not found: {path}")
    except ValueError as exc:
        raise DataError(str(exc))
    bad = [r for r in rows if isinstance(r, InvalidRecord)]
    if bad and strict:
        first = bad[0]
        raise DataError(f"{path}: invalid row {first.id}: {first.reason}")
    return [r for r in rows if isinstance(r, CorpusRecord)]


def _parse_k_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected LO:HI, e.g. 1:14")
    try:
        bounds = (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-integer k range {text!r}")
    if bounds[0] < 1 or bounds[1] < bounds[0]:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}")
    return bounds


def _parse_segments(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric segment list {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError(f"bad segment list {text!r}")
    return values


def _load_models(model_spec: str, records: list[CorpusRecord]) -> list[SweepItem]:
    scheme, sep, path = model_spec.partition(":")
    if not sep or scheme != "toy":
        raise DataError(f"unknown model spec {model_spec!r}; expected toy:script.json")
    try:
        bank = load_script_bank(path)
    except FileNotFoundError:
        raise DataError(f"model script not found: {path}")
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"bad model script {path}: {exc}")
    items = []
    for rec in records:
        script = bank.get(rec.id)
        if script is None:
            raise DataError(f"no script for utterance {rec.id!r} in {path}")
        model = ToyModel(script)
        items.append(SweepItem(rec.id, model, model.make_features(), rec.translation))
    return items


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_filter(args) -> int:
    bounds = None
    if (args.min_chars_per_frame is None) != (args.max_chars_per_frame is None):
        raise DataError("--min-chars-per-frame and --max-chars-per-frame go together")
    if args.min_chars_per_frame is not None:
        bounds = (args.min_chars_per_frame, args.max_chars_per_frame)
    try:
        cfg = FilterConfig(
            min_char_ratio=args.min_ratio,
            max_char_ratio=args.max_ratio,
            nll_threshold=args.nll_threshold,
            chars_per_frame_bounds=bounds,
        )
    except ValueError as exc:
        raise DataError(str(exc))
    try:
        records = list(read_manifest(args.manifest))
    except FileNotFoundError:
        raise DataError(f"manifest not found: {args.manifest}")
    except ValueError as exc:
        raise DataError(str(exc))
    kept, report = apply_filters(records, cfg)
    write_manifest(_out_path(args.out), kept)
    _out_path(args.report).write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    log.info("kept %d of %d records", report.kept, report.total)
    return EXIT_OK


_STATS = {"nll": None, "char_ratio": char_ratio, "chars_per_frame": chars_per_frame}


def _cmd_histogram(args) -> int:
    records = _read_records(args.manifest, strict=False)
    if args.stat == "nll":
        values = [r.nll for r in records if r.nll is not None]
        skipped = len(records) - len(values)
        if skipped:
            log.info("%d records carry no nll and were skipped", skipped)
    else:
        values = [_STATS[args.stat](r) for r in records]
    if not values:
        raise DataError(f"no {args.stat} values in {args.manifest}")
    value_range = tuple(args.range) if args.range else None
    hist = build_histogram(values, args.bins, value_range=value_range, dataset_label=args.stat)
    with open(_out_path(args.out), "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, count in enumerate(hist.counts):
            writer.writerow([hist.bin_edges[i], hist.bin_edges[i + 1], int(count)])
    if hist.n_below or hist.n_above:
        log.info("out of range: %d below, %d above", hist.n_below, hist.n_above)
    return EXIT_OK


def _cmd_segment(args) -> int:
    try:
        cfg = SegmentationConfig(max_segment_ms=args.max_ms, min_segment_ms=args.min_ms)
    except ValueError as exc:
        raise DataError(str(exc))
    try:
        if args.method == "dnc":
            probs = load_split_probabilities(args.probs)
            manifest = dnc_split(probs, cfg)
        else:
            matrix = read_features(args.probs)
            if matrix.dim != 1:
                raise ValueError(f"expected a single energy column, found {matrix.dim}")
            manifest = hybrid_split(matrix.values[:, 0], cfg, matrix.frame_duration_ms)
    except FileNotFoundError:
        raise DataError(f"probability file not found: {args.probs}")
    except ValueError as exc:
        raise DataError(str(exc))
    for warning in manifest.warnings:
        log.warning("%s", warning)
    _out_path(args.out).write_text(
        json.dumps(manifest_to_json(manifest), indent=2) + "\n", encoding="utf-8"
    )
    log.info("%d segments over %g ms", len(manifest), manifest.total_ms)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    records = _read_records(args.corpus, strict=True)
    if not records:
        raise DataError(f"empty corpus: {args.corpus}")
    items = _load_models(args.model, records)
    cfg = StreamConfig(segment_ms=args.segment_ms, k=args.k)
    out_dir = _out_path(args.trace_out)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {"segment_ms": cfg.segment_ms, "k": cfg.k, "utterances": {}}
    for item in items:
        compute = args.compute_ms
        if compute is None:
            compute = getattr(item.model, "simulated_compute_ms", 0.0)
        trace = run_session(cfg, item.model, item.audio, SimulatedClock(compute), item.id)
        trace_path = out_dir / f"{item.id}.json"
        trace_path.write_text(
            json.dumps(trace.to_json(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        index["utterances"][item.id] = {
            "total_source_ms": trace.total_source_ms,
            "n_events": len(trace),
            "file": trace_path.name,
        }
    (out_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d traces to %s", len(items), out_dir)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    records = _read_records(args.corpus, strict=True)
    if not records:
        raise DataError(f"empty corpus: {args.corpus}")
    items = _load_models(args.model, records)
    k_lo, k_hi = args.k_range
    cfgs = [
        StreamConfig(segment_ms=seg, k=k)
        for seg in args.segments
        for k in range(k_lo, k_hi + 1)
    ]
    rows = sweep(cfgs, items)
    with open(_out_path(args.curve_out), "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["segment_ms", "k", "AL", "AL_CA", "BLEU"])
        for row in rows:
            writer.writerow([row.segment_ms, row.k, row.al_ms, row.al_ca_ms, row.bleu])
            for failure in row.failures:
                log.warning("segment_ms=%g k=%d: %s", row.segment_ms, row.k, failure)
    log.info("wrote %d curve rows", len(rows))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    traces_dir = Path(args.traces)
    index_path = traces_dir / "index.json"
    if not index_path.exists():
        raise DataError(f"{index_path} not found (simulate writes it beside the traces)")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    refs = {r.id: r.translation for r in _read_records(args.refs, strict=True)}
    per_utterance: dict[str, dict] = {}
    als: list[float] = []
    al_cas: list[float] = []
    hyps: list[str] = []
    ref_texts: list[str] = []
    for utt_id, meta in index.get("utterances", {}).items():
        if utt_id not in refs:
            raise DataError(f"no reference for utterance {utt_id!r} in {args.refs}")
        trace_path = traces_dir / meta.get("file", f"{utt_id}.json")
        if not trace_path.exists():
            raise DataError(f"trace file missing: {trace_path}")
        events = json.loads(trace_path.read_text(encoding="utf-8"))
        total_ms = float(meta["total_source_ms"])
        tokens = [e["token"] for e in events]
        hyp = "".join(tokens).replace("▁", " ").strip()
        ref = refs[utt_id]
        entry: dict = {"n_tokens": len(tokens), "hypothesis": hyp}
        source, wallclock = _event_word_delays(events)
        if source:
            ref_len = max(1, len(ref.split()))
            al = average_lagging(
                source, total_ms, ref_len, pace_by_hypothesis=args.pace_by_hypothesis
            )
            al_ca = average_lagging_ca(
                wallclock,
                total_ms,
                ref_len,
                source_delays=source,
                pace_by_hypothesis=args.pace_by_hypothesis,
            )
            entry.update(
                al_ms=al,
                al_ca_ms=al_ca,
                regime=classify_regime(al).value,
                bleu=corpus_bleu([hyp], [ref]).score,
            )
            als.append(al)
            al_cas.append(al_ca)
        else:
            entry.update(al_ms=None, al_ca_ms=None, regime=None, bleu=0.0)
        hyps.append(hyp)
        ref_texts.append(ref)
        per_utterance[utt_id] = entry
    if not per_utterance:
        raise DataError(f"no traces listed in {index_path}")
    aggregate: dict = {"bleu": corpus_bleu(hyps, ref_texts).score, "signature": SIGNATURE}
    if als:
        agg_al = corpus_aggregate(als)
        aggregate.update(
            al_ms=agg_al,
            al_ca_ms=corpus_aggregate(al_cas),
            regime=classify_regime(agg_al).value,
        )
    report = {
        "n_utterances": len(per_utterance),
        "per_utterance": per_utterance,
        "aggregate": aggregate,
    }
    _out_path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _event_word_delays(events: list[dict]) -> tuple[list[float], list[float]]:
    source: list[float] = []
    wallclock: list[float] = []
    for i, event in enumerate(events):
        if i == 0 or str(event["token"]).startswith("▁"):
            source.append(float(event["source_delay_ms"]))
            wallclock.append(float(event["wallclock_delay_ms"]))
    return source, wallclock


def _cmd_bleu(args) -> int:
    try:
        hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
        ref_lines = Path(args.ref).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(str(exc))
    if len(hyp_lines) != len(ref_lines):
        raise DataError(
            f"line count mismatch: {len(hyp_lines)} hypotheses, {len(ref_lines)} references"
        )
    if not hyp_lines:
        raise DataError("empty input files")
    score = corpus_bleu(hyp_lines, ref_lines)
    print(score)
    print(SIGNATURE)
    return EXIT_OK


def _cmd_ctc(args) -> int:
    try:
        matrix = read_features(args.posterior)
    except FileNotFoundError:
        raise DataError(f"posterior file not found: {args.posterior}")
    except ValueError as exc:
        raise DataError(str(exc))
    vocab_size = matrix.dim
    if args.vocab:
        try:
            lines = Path(args.vocab).read_text(encoding="utf-8").splitlines()
        except FileNotFoundError:
            raise DataError(f"vocabulary file not found: {args.vocab}")
        tokens = [line for line in lines if line]
        if len(tokens) < 2:
            raise DataError("vocabulary file needs the blank plus at least one token")
        vocab = Vocabulary.from_tokens(tokens[1:], blank=tokens[0])
    else:
        # Without token strings, treat every non-blank label as one word.
        vocab = Vocabulary(begins_word=(False,) + (True,) * (vocab_size - 1))
    if vocab.size != vocab_size:
        raise DataError(
            f"vocabulary size {vocab.size} does not match posterior width {vocab_size}"
        )
    try:
        post = CtcPosterior(matrix.values, vocab)
    except ValueError as exc:
        raise DataError(str(exc))
    labels = greedy_labels(post)
    collapsed = collapse(labels)
    compressed = ctc_compress(matrix.values, post)
    result = {
        "frames": matrix.frames,
        "vocab_size": vocab_size,
        "greedy_labels": [int(x) for x in labels],
        "collapsed": collapsed,
        "word_count": count_words(post),
        "compression": {
            "n_groups": len(compressed),
            "group_sizes": [int(s) for s in compressed.group_sizes],
            "ratio": matrix.frames / len(compressed),
        },
    }
    if vocab.tokens is not None:
        result["collapsed_tokens"] = [vocab.tokens[i] for i in collapsed]
    if args.max_input_len is not None:
        merged = max_output_length_merge(compressed, args.max_input_len)
        threshold = args.max_input_len // 4
        factor = 0 if len(compressed) <= threshold else math.ceil(len(compressed) / threshold)
        result["max_output_length"] = {
            "max_input_len": args.max_input_len,
            "threshold": threshold,
            "factor": factor,
            "n_groups": len(merged),
        }
    text = json.dumps(result, indent=2)
    if args.out:
        _out_path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamst", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__} ({SIGNATURE})",
    )
    parser.add_argument(
        "--log-level",
        default="warning",
        choices=["debug", "info", "warning", "error"],
        help="diagnostic verbosity on stderr",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized helpers")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("filter", help="apply corpus quality filters to a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="kept records, manifest TSV")
    p.add_argument("--report", required=True, help="rejection accounting, JSON")
    p.add_argument("--min-ratio", type=float, default=0.8)
    p.add_argument("--max-ratio", type=float, default=1.6)
    p.add_argument("--nll-threshold", type=float, default=4.0)
    p.add_argument("--min-chars-per-frame", type=float, default=None)
    p.add_argument("--max-chars-per-frame", type=float, default=None)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("histogram", help="per-record statistic histogram as CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stat", required=True, choices=sorted(_STATS))
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    p.set_defaults(func=_cmd_histogram)

    p = sub.add_parser("segment", help="split long audio into bounded segments")
    p.add_argument("--probs", required=True, help="per-frame values, binary container, 1 column")
    p.add_argument("--max-ms", type=float, required=True)
    p.add_argument("--min-ms", type=float, default=0.0)
    p.add_argument("--method", choices=["dnc", "hybrid"], default="dnc")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("simulate", help="run wait-k sessions over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="toy:script.json")
    p.add_argument("--segment-ms", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trace-out", required=True, help="directory for per-utterance traces")
    p.add_argument(
        "--compute-ms",
        type=float,
        default=None,
        help="override the simulated per-token compute cost",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="latency/quality curve over (segment, k) configs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k-range", type=_parse_k_range, required=True, metavar="LO:HI")
    p.add_argument("--segments", type=_parse_segments, required=True, metavar="MS[,MS...]")
    p.add_argument("--curve-out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("evaluate", help="latency and quality report from traces")
    p.add_argument("--traces", required=True, help="directory written by simulate")
    p.add_argument("--refs", required=True, help="manifest with reference translations")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--pace-by-hypothesis",
        action="store_true",
        help="pace the latency oracle by hypothesis length instead of reference length",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bleu", help="corpus BLEU of two parallel text files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_bleu)

    p = sub.add_parser("ctc", help="greedy decoding and compression statistics")
    p.add_argument("--posterior", required=True, help="log-probs, binary container, V columns")
    p.add_argument("--vocab", default=None, help="token list, one per line, blank first")
    p.add_argument("--max-input-len", type=int, default=None)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_ctc)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    random.seed(args.seed)
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"streamst: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"streamst: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
