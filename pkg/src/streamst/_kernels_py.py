"""Pure NumPy implementation of the hot kernels.

Used when the compiled extension is unavailable (or disabled through the
STREAMST_PURE_PYTHON environment variable). Semantics are identical to the
compiled versions; only speed differs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

NEG_INF = -np.inf


def ctc_forward_nll(logprobs: np.ndarray, ext: np.ndarray) -> float:
    """Negative log-likelihood of the blank-interleaved target `ext`.

    `logprobs` is the (T, V) matrix of per-frame log-probabilities and `ext`
    the target with blanks interleaved ([blank, y1, blank, y2, ..., blank]).
    Runs the standard log-space forward recursion; returns +inf when no
    alignment of the target fits into T frames.
    """
    T = logprobs.shape[0]
    S = ext.shape[0]
    blank = ext[0]

    # alpha[s]: log-probability of all paths consuming frames 0..t that end
    # in extended-target state s.
    alpha = np.full(S, NEG_INF)
    alpha[0] = logprobs[0, ext[0]]
    if S > 1:
        alpha[1] = logprobs[0, ext[1]]

    # The diagonal skip (s-2 -> s) is allowed only into a non-blank state
    # that differs from the state two back.
    can_skip = np.zeros(S, dtype=bool)
    can_skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    frame = np.empty(S)
    for t in range(1, T):
        stay = alpha
        prev = np.concatenate(([NEG_INF], alpha[:-1]))
        skip = np.concatenate(([NEG_INF, NEG_INF], alpha[:-2]))
        merged = np.logaddexp(stay, prev)
        merged = np.where(can_skip, np.logaddexp(merged, skip), merged)
        np.take(logprobs[t], ext, out=frame)
        alpha = merged + frame

    total = alpha[S - 1] if S == 1 else np.logaddexp(alpha[S - 1], alpha[S - 2])
    return float(-total)


def segment_mean(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Mean-pool consecutive row blocks of `values`.

    `starts` holds the first row index of each block, strictly increasing,
    starting at 0; each block runs to the next start (the last one to the
    end of the matrix). Returns one averaged row per block.
    """
    T = values.shape[0]
    ends = np.concatenate((starts[1:], [T]))
    sums = np.add.reduceat(values, starts, axis=0)
    counts = (ends - starts).astype(np.float64)
    return sums / counts[:, None]
