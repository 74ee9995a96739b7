"""Benchmark the compiled kernels against the pure NumPy fallback.

Times the two hot kernels (CTC forward loss, run mean-pooling) on
realistic shapes and prints one table row per case. Run from the repo
root after an editable install:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --repeats 9 --frames 2000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from streamst import _kernels_py

try:
    from streamst import _ckernels
except ImportError:
    _ckernels = None


def make_loss_instance(rng, frames, vocab, target_len):
    logits = rng.normal(size=(frames, vocab))
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    logprobs = np.log(probs)
    target = rng.integers(1, vocab, size=target_len)
    ext = np.zeros(2 * target_len + 1, dtype=np.int_)
    ext[1::2] = target
    return np.ascontiguousarray(logprobs), ext


def make_pool_instance(rng, frames, dim, n_blocks):
    values = np.ascontiguousarray(rng.normal(size=(frames, dim)))
    starts = np.zeros(n_blocks, dtype=np.int_)
    starts[1:] = np.sort(rng.choice(np.arange(1, frames), size=n_blocks - 1, replace=False))
    return values, starts


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of-N timing")
    parser.add_argument("--frames", type=int, default=1000, help="frames per instance")
    parser.add_argument("--vocab", type=int, default=256, help="CTC vocabulary size")
    parser.add_argument("--target-len", type=int, default=80, help="CTC target length")
    parser.add_argument("--dim", type=int, default=256, help="vector width for pooling")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    logprobs, ext = make_loss_instance(rng, args.frames, args.vocab, args.target_len)
    values, starts = make_pool_instance(rng, args.frames, args.dim, max(2, args.frames // 4))

    cases = [
        ("ctc_forward_nll", (logprobs, ext)),
        ("segment_mean", (values, starts)),
    ]

    print(f"frames={args.frames} vocab={args.vocab} target={args.target_len} dim={args.dim}")
    print(f"{'kernel':<18} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, payload in cases:
        py_fn = getattr(_kernels_py, name)
        py_time = best_of(args.repeats, py_fn, *payload)
        if _ckernels is None:
            print(f"{name:<18} {py_time * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
            continue
        c_fn = getattr(_ckernels, name)
        c_time = best_of(args.repeats, c_fn, *payload)
        # sanity: both backends agree on the answer they just produced
        ref = np.asarray(py_fn(*payload))
        got = np.asarray(c_fn(*payload))
        if not np.allclose(got, ref, atol=1e-9, equal_nan=True):
            raise SystemExit(f"{name}: backend results diverge")
        print(
            f"{name:<18} {py_time * 1e3:>10.3f}ms {c_time * 1e3:>10.3f}ms "
            f"{py_time / c_time:>8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
