"""Kernel backend selection.

Prefers the compiled extension, falls back to the NumPy implementation when
it is not built. STREAMST_PURE_PYTHON=1 forces the fallback (useful for the
benchmark and for debugging).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("STREAMST_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND


def backend_name() -> str:
    return BACKEND


def ctc_forward_nll(logprobs: np.ndarray, ext: np.ndarray) -> float:
    logprobs = np.ascontiguousarray(logprobs, dtype=np.float64)
    ext = np.ascontiguousarray(ext, dtype=np.int_)
    return float(_impl.ctc_forward_nll(logprobs, ext))


def segment_mean(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    starts = np.ascontiguousarray(starts, dtype=np.int_)
    return np.asarray(_impl.segment_mean(values, starts))
