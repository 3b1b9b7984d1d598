"""Pure numpy implementations of the hot kernels.

Must stay bit-compatible with ``_kernels.pyx``: the Monte Carlo counts are
compared exactly across backends, so every uniform is produced by the same
SplitMix64 stream and compared against the same double thresholds.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1
TWO_M53 = 2.0 ** -53

_G = np.uint64(GOLDEN)
_M1 = np.uint64(MIX1)
_M2 = np.uint64(MIX2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))

CHUNK = 1 << 16

BACKEND = "python"


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def substream_seed(seed: int, index: int) -> int:
    """Starting state of trial ``index`` under master ``seed``."""
    return mix64((mix64(seed) + (index + 1) * GOLDEN) & MASK64)


def _mix_arr(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _next_uniform(state):
    """Advance ``state`` in place; return uniforms in [0, 1)."""
    state += _G
    return (_mix_arr(state) >> _S11).astype(np.float64) * TWO_M53


def _trial_states(seed, start, stop):
    base = mix64(seed)
    idx = np.arange(start, stop, dtype=np.uint64) + np.uint64(1)
    return _mix_arr(np.uint64(base) + idx * _G)


def markov_path(a, b, N, stream_seed):
    state = np.array([stream_seed & MASK64], dtype=np.uint64)
    out = np.empty(N, dtype=np.uint8)
    p1 = a / (a + b)
    x = bool(_next_uniform(state)[0] < p1)
    out[0] = x
    for k in range(1, N):
        u = _next_uniform(state)[0]
        x = (u >= b) if x else (u < a)
        out[k] = x
    return out


def markov_union_hits(a, b, N, seed, start, stop):
    p1 = a / (a + b)
    hits = 0
    for lo in range(start, stop, CHUNK):
        hi = min(stop, lo + CHUNK)
        with np.errstate(over="ignore"):
            state = _trial_states(seed, lo, hi)
            x = _next_uniform(state) < p1
            hit = x.copy()
            for _ in range(1, N):
                u = _next_uniform(state)
                x = np.where(x, u >= b, u < a)
                hit |= x
        hits += int(np.count_nonzero(hit))
    return hits


def block_union_hits(p, q, seed, start, stop):
    hits = 0
    for lo in range(start, stop, CHUNK):
        hi = min(stop, lo + CHUNK)
        with np.errstate(over="ignore"):
            state = _trial_states(seed, lo, hi)
            hit = np.zeros(hi - lo, dtype=bool)
            for _ in range(q):
                hit |= _next_uniform(state) < p
        hits += int(np.count_nonzero(hit))
    return hits


def alpha_cut(D):
    """``max_A sum_c (sum_{r in A} D[r, c])_+`` over all row subsets ``A``."""
    D = np.ascontiguousarray(D, dtype=np.float64)
    r = D.shape[0]
    if r == 0:
        return 0.0
    best = 0.0
    bits = np.arange(r, dtype=np.int64)
    total = 1 << r
    for lo in range(0, total, CHUNK):
        masks = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
        sel = ((masks[:, None] >> bits) & 1).astype(np.float64)
        cols = sel @ D
        best = max(best, float(np.maximum(cols, 0.0).sum(axis=1).max()))
    return best
