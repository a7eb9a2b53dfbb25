"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are run on identical inputs; the script also checks that
their outputs agree.
"""

import argparse
import timeit

import numpy as np

from zygwave import kernels
from zygwave.coefficients import DEFAULT_KERNEL


def cases(rng):
    f = np.cumsum(rng.standard_normal(4096)) / 64
    shifts = np.arange(1, 512)
    table = rng.standard_normal((2049, 256))
    weights = DEFAULT_KERNEL.weights(2.0**-3, 2.0**-10, 1)
    rows = np.arange(0, 2049, 64)
    yield "second_difference_sup n=4096", lambda: kernels.second_difference_sup(f, shifts)
    yield "first_difference_sup n=4096", lambda: kernels.first_difference_sup(f, shifts)
    yield (
        "second_difference_sup_2d 2049x256",
        lambda: kernels.second_difference_sup_2d(table, np.arange(1, 17), np.arange(1, 17)),
    )
    yield "convolve_reflect rows=33 M=" + str(weights.size // 2), lambda: kernels.convolve_reflect(
        table, weights, rows
    )
    small = DEFAULT_KERNEL.weights(2.0**-5, 2.0**-10, 0)
    yield "convolve_reflect full M=" + str(small.size // 2), lambda: kernels.convolve_reflect(table, small)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    try:
        kernels.use_backend("cython")
    except ImportError:
        print("compiled extension not built; only the fallback can be timed")
        return
    print(f"{'kernel':<40} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for name, fn in cases(np.random.default_rng(0)):
        out = {}
        timing = {}
        for backend in ("python", "cython"):
            kernels.use_backend(backend)
            out[backend] = np.asarray(fn())
            timing[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        err = float(np.max(np.abs(out["python"] - out["cython"])))
        print(
            f"{name:<40} {timing['python']:12.2f} {timing['cython']:12.2f} "
            f"{timing['python'] / timing['cython']:8.1f}   max diff {err:.1e}"
        )


if __name__ == "__main__":
    main()
