"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once to trigger compilation before timing.
"""

import argparse
import math
import timeit

import numpy as np

from odk import USE_NUMBA
from odk import lattice_tools as lt
from odk import sampler


def _cases():
    rng = np.random.default_rng(0)

    X = np.array([[1.0, math.sqrt(2), math.sqrt(3)]])
    _, N = lt.kernel_basis(X)
    NT = np.ascontiguousarray(N.T)
    yield ("relation sweep, p=3, H=40",
           lambda: lt.sweep_relations(NT, 40, 1e-9, 1, lt.CHANCE_LEVEL),
           lambda: lt._sweep_numpy(NT, 40, 1e-9, 1, lt.CHANCE_LEVEL))

    pts = rng.uniform(-1.1, 1.1, size=(1_000_000, 2))
    lo = np.array([-1.0, -1.0])
    yield ("grid binning, 1e6 points in 2d",
           lambda: sampler.bin_points(pts, lo, 0.01, 200),
           lambda: sampler._bin_numpy(pts, lo, 0.01, 200))

    powers = rng.normal(size=(2, 401, 3, 3)) + 1j * rng.normal(size=(2, 401, 3, 3))
    x = np.ones(3, dtype=complex)
    idx = rng.integers(0, 401, size=(200_000, 2))
    yield ("orbit words, 2e5 points in C^3",
           lambda: sampler.orbit_points(powers, x, idx),
           lambda: sampler._orbit_numpy(powers, x, idx))

    rows = np.hstack([np.eye(6), 1e12 * rng.normal(size=(6, 3))])
    yield ("LLL, 6 rows",
           lambda: lt.lll_rows(rows.copy(), 0.99, lt.LLL_MAX_ITER),
           lambda: lt._lll_core(rows.copy(), 0.99, lt.LLL_MAX_ITER))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not USE_NUMBA:
        print("numba disabled (ODK_NUMBA=0 or not installed); both columns run the fallback")
    print(f"{'kernel':36s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, fast, slow in _cases():
        fast()
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {t_fast:12.2f} {t_slow:12.2f} {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
