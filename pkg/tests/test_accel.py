"""The numba kernels and their numpy fallbacks must agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from odk import lattice_tools as lt
from odk import sampler
from odk._accel import USE_NUMBA


def test_sweep_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(5):
        X = np.vstack([rng.integers(-3, 4, size=3), rng.normal(size=3)]).astype(float)
        r, N = lt.kernel_basis(X)
        NT = np.ascontiguousarray(N.T)
        a = lt._sweep_numpy(NT, 6, 1e-9, r, lt.CHANCE_LEVEL)
        b = lt._sweep_numba(NT, 6, 1e-9, r, lt.CHANCE_LEVEL)
        assert tuple(a[0]) == tuple(b[0]) and bool(a[1]) == bool(b[1])
        assert a[2] == pytest.approx(b[2])


def test_bin_backends_agree():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1.2, 1.2, size=(500, 2))
    lo = np.array([-1.0, -1.0])
    oa, ia = sampler._bin_numpy(pts, lo, 0.1, 20)
    ob, ib = sampler._bin_numba(pts, lo, 0.1, 20)
    assert ia == ib and np.array_equal(oa, ob)


def test_orbit_backends_agree():
    rng = np.random.default_rng(2)
    powers = rng.normal(size=(2, 5, 2, 2)) + 1j * rng.normal(size=(2, 5, 2, 2))
    x = np.array([1.0, 1j])
    idx = rng.integers(0, 5, size=(30, 2))
    assert np.allclose(sampler._orbit_numpy(powers, x, idx), sampler._orbit_numba(powers, x, idx))


def test_lll_pure_python_path():
    rows = np.array([[1, 1, 1], [-1, 0, 2], [3, 5, 6]], dtype=float)
    B, U, status = lt._lll_core(rows.copy(), 0.75, 1000)
    assert status == 0
    assert sorted(np.round((B ** 2).sum(1)).astype(int)) == [1, 2, 5]


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend not active")
def test_numpy_fallback_end_to_end():
    code = (
        "import math; from odk import USE_NUMBA; from odk.density import GeneratorFamily, decide_density;"
        "assert not USE_NUMBA;"
        "print(decide_density(GeneratorFamily.real_float([[1, 0], [0, 1], [1.5, 0.25]])).relation.s,"
        "decide_density(GeneratorFamily.real_float([[1], [math.sqrt(2)], [1.5]])).outcome.value)"
    )
    env = dict(os.environ, ODK_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "(1, -2, 1) DENSE_UP_TO_HEIGHT"
