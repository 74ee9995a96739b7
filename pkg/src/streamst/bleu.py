"""Corpus BLEU with mixed case, 13a tokenization, and exponential smoothing.

Matches the evaluation signature BLEU+case.mixed+smooth.exp+tok.13a:
n-gram orders 1..4, counts pooled over the corpus, NIST exponential
smoothing of zero-count precisions, and the standard brevity penalty.
Single reference per hypothesis.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

MAX_ORDER = 4

SIGNATURE = "BLEU+case.mixed+smooth.exp+tok.13a"

_SPLIT_SYMBOLS = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_PERIOD_COMMA_PRE = re.compile(r"([^0-9])([\.,])")
_PERIOD_COMMA_POST = re.compile(r"([\.,])([^0-9])")
_DIGIT_DASH = re.compile(r"([0-9])(\-)")
_WHITESPACE = re.compile(r"\s+")


def tokenize_13a(text: str) -> list[str]:
    """Minimal international tokenization (the mteval-v13a rule set).

    Splits punctuation and symbols from words, keeps periods and commas
    attached inside numbers, separates a dash after a digit, and normalizes
    whitespace. Case is preserved.
    """
    norm = text
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")

    norm = f" {norm} "
    norm = _SPLIT_SYMBOLS.sub(r" \1 ", norm)
    norm = _PERIOD_COMMA_PRE.sub(r"\1 \2 ", norm)
    norm = _PERIOD_COMMA_POST.sub(r" \1 \2", norm)
    norm = _DIGIT_DASH.sub(r"\1 \2 ", norm)
    norm = _WHITESPACE.sub(" ", norm).strip()
    return norm.split(" ") if norm else []


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, float, float, float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def __str__(self) -> str:
        parts = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (
            f"BLEU = {self.score:.2f} {parts} "
            f"(BP = {self.brevity_penalty:.3f} hyp_len = {self.hyp_len} ref_len = {self.ref_len})"
        )


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(hyps: Iterable[str], refs: Iterable[str]) -> BleuScore:
    """Corpus-level BLEU of hypothesis/reference sentence pairs.

    Clipped n-gram matches are pooled over the whole corpus before the
    precisions are formed. A zero-count precision is smoothed to a numerator
    of 1/2^p where p counts the zero precisions seen so far (exponential
    smoothing); an order with no n-grams at all yields a zero score.
    """
    hyps = list(hyps)
    refs = list(refs)
    if len(hyps) != len(refs):
        raise ValueError(f"got {len(hyps)} hypotheses but {len(refs)} references")
    if not hyps:
        raise ValueError("empty corpus")

    matched = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_tokens = tokenize_13a(hyp)
        ref_tokens = tokenize_13a(ref)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, MAX_ORDER + 1):
            hyp_ngrams = _ngram_counts(hyp_tokens, n)
            if not hyp_ngrams:
                continue
            ref_ngrams = _ngram_counts(ref_tokens, n)
            total[n - 1] += sum(hyp_ngrams.values())
            matched[n - 1] += sum(
                min(count, ref_ngrams[gram]) for gram, count in hyp_ngrams.items()
            )

    precisions = [0.0] * MAX_ORDER
    smooth_numerator = 1.0
    for n in range(MAX_ORDER):
        if total[n] == 0:
            continue  # precision stays 0; the score collapses to 0 below
        if matched[n] == 0:
            smooth_numerator /= 2.0
            precisions[n] = smooth_numerator / total[n]
        else:
            precisions[n] = matched[n] / total[n]

    if hyp_len == 0 or any(p == 0.0 for p in precisions):
        brevity_penalty = 0.0 if hyp_len == 0 else _brevity_penalty(hyp_len, ref_len)
        return BleuScore(0.0, tuple(precisions), brevity_penalty, hyp_len, ref_len)

    brevity_penalty = _brevity_penalty(hyp_len, ref_len)
    mean_log_precision = sum(math.log(p) for p in precisions) / MAX_ORDER
    score = brevity_penalty * math.exp(mean_log_precision) * 100.0
    return BleuScore(score, tuple(precisions), brevity_penalty, hyp_len, ref_len)


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)
