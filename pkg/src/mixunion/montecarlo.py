"""Seeded Monte Carlo estimates of union probabilities.

Trial ``t`` under master seed ``s`` draws from its own SplitMix64 stream
started at ``substream_seed(s, t)``, so splitting the trials across
workers never changes which uniforms a trial sees.  Workers only return
integer hit counts, and integer addition is order independent; the
estimate is therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import BoundsError
from .models import BlockFamily, Markov2Model

UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise BoundsError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= UINT64_MAX:
            raise BoundsError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise BoundsError(f"workers must be a positive integer, got {self.workers!r}")


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    ci95: tuple
    hits: int
    trials: int

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "ci95": list(self.ci95), "hits": self.hits, "trials": self.trials}


def substream_seed(seed: int, index: int) -> int:
    return kernels.substream_seed(seed, index)


def sample_markov2(a: float, b: float, N: int, stream_seed: int) -> np.ndarray:
    """One stationary path ``X_1..X_N`` as a uint8 array."""
    Markov2Model(a, b, N)  # parameter validation
    return kernels.markov_path(float(a), float(b), int(N), int(stream_seed) & UINT64_MAX)


def _chunks(trials, workers):
    edges = np.linspace(0, trials, workers + 1).astype(np.int64)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _summarise(hits, trials) -> McEstimate:
    est = hits / trials
    stderr = math.sqrt(est * (1.0 - est) / trials)
    if hits in (0, trials):
        # normal interval collapses to a point; widen rule-of-three style
        lo = max(0.0, est - 1.0 / trials)
        hi = min(1.0, est + 3.0 / trials)
    else:
        lo = max(0.0, est - 1.96 * stderr)
        hi = min(1.0, est + 1.96 * stderr)
    return McEstimate(est, stderr, (lo, hi), hits, trials)


def estimate_union(model, cfg: McConfig) -> McEstimate:
    """Fraction of simulated sequences in which at least one event occurs."""
    if isinstance(model, Markov2Model):
        def work(span):
            return kernels.markov_union_hits(model.a, model.b, model.N, cfg.seed, *span)
    elif isinstance(model, BlockFamily):
        def work(span):
            return kernels.block_union_hits(model.p, model.q, cfg.seed, *span)
    else:
        raise BoundsError(f"cannot simulate a {type(model).__name__}")
    spans = _chunks(cfg.trials, cfg.workers)
    if len(spans) == 1:
        hits = work(spans[0])
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            hits = sum(pool.map(work, spans))
    return _summarise(int(hits), cfg.trials)
