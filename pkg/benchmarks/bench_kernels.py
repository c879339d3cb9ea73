#!/usr/bin/env python
"""
Time the numba kernels against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 256 1024 4096 --repeat 7
    python benchmarks/bench_kernels.py --output bench.json
"""

import argparse
import json
import platform
import time

import numpy as np

from qgenfun import _kernels


def random_bloch(rng, n, rmax=0.95):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rmax * rng.uniform(size=(n, 1)) ** (1 / 3)


def random_psd(rng, n):
    a = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    return a @ np.conj(np.transpose(a, (0, 2, 1)))


def cases(rng, n):
    ra, rb = random_bloch(rng, n), random_bloch(rng, n)
    side = int(np.sqrt(n)) * 4
    sa, sb = random_bloch(rng, side), random_bloch(rng, side)
    dr = rng.normal(size=(n, 2, 3)) * 0.1
    return {
        "bloch_fidelity_pairs": (ra, rb),
        "bloch_fidelity_matrix": (sa, sb),
        "sqrt2x2_batch": (random_psd(rng, n), 1e-12),
        "bloch_qfim_batch": (ra, dr, 1e-8),
    }


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 4096, 65536])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--output", help="write results as JSON")
    args = parser.parse_args()

    if _kernels.numba_kernels is None:
        print("numba not available; only the numpy path can run")
    rng = np.random.default_rng(args.seed)
    results = []

    # compile once outside the timed loop
    if _kernels.numba_kernels is not None:
        for name, a in cases(rng, 8).items():
            getattr(_kernels.numba_kernels, name)(*a)

    print(f"{'kernel':24s} {'n':>7s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for n in args.sizes:
        for name, a in cases(rng, n).items():
            t_np = best_time(getattr(_kernels.numpy_kernels, name), a, args.repeat)
            t_nb = float("nan")
            if _kernels.numba_kernels is not None:
                ref = getattr(_kernels.numpy_kernels, name)(*a)
                got = getattr(_kernels.numba_kernels, name)(*a)
                for x, y in zip(np.atleast_1d(ref) if not isinstance(ref, tuple) else ref,
                                np.atleast_1d(got) if not isinstance(got, tuple) else got):
                    assert np.allclose(x, y, equal_nan=True), name
                t_nb = best_time(getattr(_kernels.numba_kernels, name), a, args.repeat)
            print(f"{name:24s} {n:7d} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.2f}")
            results.append({"kernel": name, "n": n, "numpy_s": t_np, "numba_s": t_nb})

    if args.output:
        with open(args.output, "w") as fh:
            json.dump({"platform": platform.platform(), "numpy": np.__version__,
                       "results": results}, fh, indent=1)


if __name__ == "__main__":
    main()
