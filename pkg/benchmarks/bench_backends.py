"""Timing comparison of the compiled and pure-python sampling backends.

The truncated-normal fill is the hot loop of the chain (one draw per output
sample per iteration), so it is timed in isolation: the numba-compiled
kernel against the interpreted implementation behind it, on identical
inputs and identical random streams. Both must produce bit-identical
output; the script verifies that before reporting speedups. A short
end-to-end chain run is timed as well to show what the kernel speedup is
worth in practice.

Run with QSYSID_NO_NUMBA=1 to see the pure path only.

Usage:
    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --size 200000 --repeats 5
"""

import argparse
import time

import numpy as np

from qsysid.backend import NUMBA_ENABLED, python_impl
from qsysid.gibbs import ChainConfig, run_chain
from qsysid.quantizer import BinaryQuantizer
from qsysid.samplers import (
    SUBSTREAM_INPUT,
    SUBSTREAM_NOISE,
    SUBSTREAM_SYSTEM,
    RngHandle,
    _truncnorm_fill,
)
from qsysid.simulate import (
    generate_dataset,
    impulse_response,
    normalize_response,
    random_system,
    white_input,
)

REGIMES = [
    ("one-sided body", 0.0, np.inf),
    ("one-sided tail", 3.0, np.inf),
    ("two-sided", -1.0, 1.0),
    ("narrow window", 2.0, 2.1),
]


def time_fill(fn, mu, sigma, lo, hi, seed, repeats):
    out = np.empty_like(mu)
    best = np.inf
    for _ in range(repeats):
        gen = RngHandle(seed, 0).generator
        tic = time.perf_counter()
        fn(mu, sigma, lo, hi, out, gen)
        best = min(best, time.perf_counter() - tic)
    return best, out.copy()


def bench_kernel(size, repeats):
    pure = python_impl(_truncnorm_fill)
    print(f"truncated-normal fill, {size} draws (best of {repeats}):")
    header = f"  {'regime':<16} {'pure (ms)':>10}"
    if NUMBA_ENABLED:
        header += f" {'compiled (ms)':>14} {'speedup':>8}"
    print(header)
    for name, a, b in REGIMES:
        mu = np.zeros(size)
        lo = np.full(size, a)
        hi = np.full(size, b)
        t_pure, out_pure = time_fill(pure, mu, 1.0, lo, hi, 42, repeats)
        line = f"  {name:<16} {t_pure * 1e3:>10.2f}"
        if NUMBA_ENABLED:
            t_jit, out_jit = time_fill(_truncnorm_fill, mu, 1.0, lo, hi, 42, repeats)
            if not np.array_equal(out_pure, out_jit):
                raise AssertionError(f"backends disagree in regime {name!r}")
            line += f" {t_jit * 1e3:>14.2f} {t_pure / t_jit:>7.1f}x"
        print(line)
    if NUMBA_ENABLED:
        print("  outputs bit-identical across backends in every regime")


def bench_chain(repeats):
    seed = 7
    tf = random_system(RngHandle(seed, SUBSTREAM_SYSTEM), 10, 10)
    g = normalize_response(impulse_response(tf, 50))
    u = white_input(500, RngHandle(seed, SUBSTREAM_INPUT))
    quantizer = BinaryQuantizer(1.0)
    dataset = generate_dataset(g, u, 10.0, quantizer, RngHandle(seed, SUBSTREAM_NOISE))
    config = ChainConfig(iterations=400, burn_in=100, n=50, beta=0.8, seed=seed)
    best = np.inf
    for _ in range(repeats):
        tic = time.perf_counter()
        run_chain(dataset, quantizer, config)
        best = min(best, time.perf_counter() - tic)
    backend = "compiled" if NUMBA_ENABLED else "pure python"
    print(f"end-to-end chain (N=500, n=50, 400 iterations, {backend} backend): "
          f"{best:.2f}s best of {repeats}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=100_000,
                        help="draws per kernel timing (default 100000)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repetitions, best is reported (default 3)")
    parser.add_argument("--skip-chain", action="store_true",
                        help="only time the sampling kernel")
    args = parser.parse_args()

    if NUMBA_ENABLED:
        # compile outside the timed region
        warm = np.zeros(4)
        _truncnorm_fill(warm, 1.0, np.full(4, -1.0), np.full(4, 1.0),
                        np.empty(4), RngHandle(0, 0).generator)
        print("backend: numba (set QSYSID_NO_NUMBA=1 for the pure path)")
    else:
        print("backend: pure python (numba unavailable or disabled)")

    bench_kernel(args.size, args.repeats)
    if not args.skip_chain:
        bench_chain(args.repeats)


if __name__ == "__main__":
    main()
