import numpy as np
import pytest

from streamst.ctc import CtcPosterior, Vocabulary

GOLDEN_SEGMENTS = (320.0, 640.0)
GOLDEN_KS = (1, 3, 7)
SCRIPT_NAMES = ("short", "medium", "long")


def make_vocab(size: int, all_words: bool = True) -> Vocabulary:
    flags = (False,) + (all_words,) * (size - 1)
    return Vocabulary(begins_word=flags)


def random_posterior(rng: np.random.Generator, frames: int, vocab_size: int) -> CtcPosterior:
    logits = rng.normal(size=(frames, vocab_size)) * 2.0
    logprobs = logits - _logsumexp_rows(logits)
    return CtcPosterior(logprobs, make_vocab(vocab_size))


def _logsumexp_rows(logits: np.ndarray) -> np.ndarray:
    peak = logits.max(axis=1, keepdims=True)
    return peak + np.log(np.exp(logits - peak).sum(axis=1, keepdims=True))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20220517)
