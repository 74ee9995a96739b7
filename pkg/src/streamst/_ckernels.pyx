# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: CTC forward recursion and block mean-pooling.

Mirrors streamst._kernels_py exactly; the selector in streamst.kernels picks
whichever is available.
"""

from libc.math cimport exp, log1p, INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cdef inline double logadd(double a, double b) noexcept nogil:
    # log(e^a + e^b), safe against -inf on either side.
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        return b + log1p(exp(a - b))
    return a + log1p(exp(b - a))


def ctc_forward_nll(double[:, ::1] logprobs, long[::1] ext):
    """Negative log-likelihood of the blank-interleaved target `ext`."""
    cdef Py_ssize_t T = logprobs.shape[0]
    cdef Py_ssize_t S = ext.shape[0]
    cdef long blank = ext[0]
    cdef Py_ssize_t t, s, lo
    cdef double stay, best

    alpha_arr = np.full(S, -INFINITY)
    next_arr = np.empty(S)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] nxt = next_arr

    alpha[0] = logprobs[0, ext[0]]
    if S > 1:
        alpha[1] = logprobs[0, ext[1]]

    with nogil:
        for t in range(1, T):
            # States earlier than S - 2*(T-t) can no longer reach the end;
            # keeping them is harmless, so the plain full sweep is used.
            for s in range(S):
                stay = alpha[s]
                if s >= 1:
                    stay = logadd(stay, alpha[s - 1])
                if s >= 2 and ext[s] != blank and ext[s] != ext[s - 2]:
                    stay = logadd(stay, alpha[s - 2])
                nxt[s] = stay + logprobs[t, ext[s]]
            for s in range(S):
                alpha[s] = nxt[s]

    cdef double total = alpha[S - 1]
    if S > 1:
        total = logadd(total, alpha[S - 2])
    return -total


def segment_mean(double[:, ::1] values, long[::1] starts):
    """Mean-pool consecutive row blocks of `values` (see NumPy twin)."""
    cdef Py_ssize_t T = values.shape[0]
    cdef Py_ssize_t D = values.shape[1]
    cdef Py_ssize_t G = starts.shape[0]
    cdef Py_ssize_t g, t, d, lo, hi
    cdef double inv

    out_arr = np.zeros((G, D))
    cdef double[:, ::1] out = out_arr

    with nogil:
        for g in range(G):
            lo = starts[g]
            hi = starts[g + 1] if g + 1 < G else T
            for t in range(lo, hi):
                for d in range(D):
                    out[g, d] += values[t, d]
            inv = 1.0 / (hi - lo)
            for d in range(D):
                out[g, d] *= inv

    return out_arr
