# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    state[0] += GOLDEN
    return <double>(_mix(state[0]) >> 11) * TWO_M53


def mix64(z):
    return int(_mix(<uint64_t>(int(z) & 0xFFFFFFFFFFFFFFFF)))


def substream_seed(seed, index):
    cdef uint64_t base = _mix(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef uint64_t idx = <uint64_t>(int(index) + 1)
    return int(_mix(base + idx * GOLDEN))


def markov_path(double a, double b, Py_ssize_t N, stream_seed):
    cdef uint64_t state = <uint64_t>(int(stream_seed) & 0xFFFFFFFFFFFFFFFF)
    out = np.empty(N, dtype=np.uint8)
    cdef unsigned char[::1] view = out
    cdef double p1 = a / (a + b)
    cdef double u
    cdef bint x = _uniform(&state) < p1
    cdef Py_ssize_t k
    view[0] = x
    for k in range(1, N):
        u = _uniform(&state)
        x = (u >= b) if x else (u < a)
        view[k] = x
    return out


def markov_union_hits(double a, double b, Py_ssize_t N, seed, int64_t start, int64_t stop):
    cdef uint64_t base = _mix(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef double p1 = a / (a + b)
    cdef int64_t t, hits = 0
    cdef Py_ssize_t k
    cdef uint64_t state
    cdef bint x
    cdef double u
    with nogil:
        for t in range(start, stop):
            state = _mix(base + <uint64_t>(t + 1) * GOLDEN)
            x = _uniform(&state) < p1
            k = 1
            while not x and k < N:
                # from state 0 the chain moves to 1 with probability a
                x = _uniform(&state) < a
                k += 1
            if x:
                hits += 1
    return int(hits)


def block_union_hits(double p, Py_ssize_t q, seed, int64_t start, int64_t stop):
    cdef uint64_t base = _mix(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef int64_t t, hits = 0
    cdef Py_ssize_t j
    cdef uint64_t state
    with nogil:
        for t in range(start, stop):
            state = _mix(base + <uint64_t>(t + 1) * GOLDEN)
            for j in range(q):
                if _uniform(&state) < p:
                    hits += 1
                    break
    return int(hits)


def alpha_cut(D):
    """Gray-code walk over row subsets of ``D``."""
    cdef double[:, ::1] M = np.ascontiguousarray(D, dtype=np.float64)
    cdef Py_ssize_t r = M.shape[0], c = M.shape[1]
    if r == 0:
        return 0.0
    if r > 40:
        raise ValueError("too many rows to enumerate")
    cols_arr = np.zeros(c, dtype=np.float64)
    cdef double[::1] cols = cols_arr
    cdef double best = 0.0, s
    cdef uint64_t i, total = (<uint64_t>1) << r, gray = 0, prev = 0, flip
    cdef Py_ssize_t row, j
    with nogil:
        for i in range(1, total):
            gray = i ^ (i >> 1)
            flip = gray ^ prev
            row = 0
            while (flip >> row) != 1:
                row += 1
            if gray & flip:
                for j in range(c):
                    cols[j] += M[row, j]
            else:
                for j in range(c):
                    cols[j] -= M[row, j]
            prev = gray
            s = 0.0
            for j in range(c):
                if cols[j] > 0:
                    s += cols[j]
            if s > best:
                best = s
    return best
