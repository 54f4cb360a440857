#!/usr/bin/env python3
"""Benchmark the compiled transform kernel against the numpy fallback.

Runs the full character-transform on dense states of increasing size and
prints one row per space with both timings.

Usage: python benchmarks/bench_transform.py [--repeats 3]
"""

import argparse
import time

import numpy as np

from glhsp.fq import field_ctx
from glhsp.fqla import standard_form
from glhsp.qsim import KERNEL_BACKEND, StateVector, VectorSpace, qft_phi

CASES = [
    (2, 1, 12),
    (2, 1, 16),
    (2, 1, 20),
    (2, 1, 22),
    (3, 1, 10),
    (3, 1, 12),
    (5, 1, 8),
    (2, 2, 10),
    (2, 4, 5),
]


def time_backend(state, backend, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        qft_phi(state, standard_form(), backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"default backend: {KERNEL_BACKEND}")
    print(f"{'space':>14} {'dim':>10} {'compiled':>10} {'numpy':>10} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for p, r, m in CASES:
        ctx = field_ctx(p, r)
        space = VectorSpace(ctx, m)
        amps = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        amps /= np.linalg.norm(amps)
        state = StateVector(space, amps)
        if KERNEL_BACKEND == "compiled":
            t_c = time_backend(state, None, args.repeats)
        else:
            t_c = float("nan")
        t_py = time_backend(state, "python", args.repeats)
        ratio = t_py / t_c if t_c == t_c and t_c > 0 else float("nan")
        print(f"F_{ctx.q}^{m:>2} {'':>6} {space.dim:>10} {t_c:>10.4f} {t_py:>10.4f} {ratio:>8.2f}")


if __name__ == "__main__":
    main()
