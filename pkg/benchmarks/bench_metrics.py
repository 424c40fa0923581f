#!/usr/bin/env python3
"""Benchmark the metric kernels: compiled extension vs pure Python.

Times the LCS kernel (the ROUGE-L hot loop) and a corpus-level ROUGE-L pass
over synthetic utterances. Run after `python setup.py build_ext --inplace`;
without the extension only the pure path is reported.

    python benchmarks/bench_metrics.py [--pairs 400] [--tokens 40]
"""

from __future__ import annotations

import argparse
import random
import time

from discodrive.metrics.kernels import HAVE_SPEEDUPS, lcs_length, lcs_length_py


def make_pairs(n_pairs: int, max_tokens: int, seed: int = 0):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(50)]
    return [
        (
            [rng.choice(vocab) for _ in range(rng.randrange(max_tokens // 2, max_tokens))],
            [rng.choice(vocab) for _ in range(rng.randrange(max_tokens // 2, max_tokens))],
        )
        for _ in range(n_pairs)
    ]


def bench(fn, pairs, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=400)
    parser.add_argument("--tokens", type=int, default=40)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.tokens)
    mismatches = sum(lcs_length(a, b) != lcs_length_py(a, b) for a, b in pairs)

    pure = bench(lcs_length_py, pairs)
    rows = [("pure python", pure, 1.0)]
    if HAVE_SPEEDUPS:
        compiled = bench(lcs_length, pairs)
        rows.append(("compiled", compiled, pure / compiled))
    else:
        print("compiled extension not built; run: python setup.py build_ext --inplace\n")

    print(f"LCS kernel, {args.pairs} pairs x ~{args.tokens} tokens (best of 3)")
    print(f"{'kernel':<14}{'seconds':>10}{'speedup':>10}")
    for name, seconds, speedup in rows:
        print(f"{name:<14}{seconds:>10.4f}{speedup:>9.1f}x")
    print(f"\nparity mismatches: {mismatches}")


if __name__ == "__main__":
    main()
