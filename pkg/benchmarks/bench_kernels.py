"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from mixunion import _fallback
from mixunion._backend import available_backends

CASES = {
    "markov_union_hits(0.2, 0.3, N=50, 2e5 trials)":
        lambda k: k.markov_union_hits(0.2, 0.3, 50, 1, 0, 200_000),
    "markov_union_hits(0.05, 0.15, N=100, 2e5 trials)":
        lambda k: k.markov_union_hits(0.05, 0.15, 100, 1, 0, 200_000),
    "block_union_hits(p=1e-3, q=1000, 2e4 trials)":
        lambda k: k.block_union_hits(1e-3, 1000, 1, 0, 20_000),
    "alpha_cut(12 x 16)":
        lambda k, D=np.random.default_rng(0).normal(size=(12, 16)): k.alpha_cut(D),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    backends.setdefault("python", _fallback)
    names = sorted(backends)
    print(f"{'kernel':<50}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, fn in CASES.items():
        results = {n: fn(backends[n]) for n in names}
        if len(names) == 2:
            a, b = (results[n] for n in names)
            assert a == b or abs(a - b) < 1e-9, f"backends disagree on {label}: {results}"
        times = {n: min(timeit.repeat(lambda: fn(backends[n]), number=1, repeat=args.repeat))
                 for n in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<50}" + "".join(f"{times[n] * 1e3:>10.1f}ms" for n in names)
              + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
