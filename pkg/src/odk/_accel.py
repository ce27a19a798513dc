"""Kernel backend selection.

Hot loops are written once as plain numpy-array code and compiled with
``numba.njit`` when available.  Set ``ODK_NUMBA=0`` to force the pure
numpy path (useful for debugging and for the backend benchmark).
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_enabled() -> bool:
    value = os.environ.get("ODK_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


USE_NUMBA = numba is not None and _env_enabled()


def maybe_njit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def pick(numba_impl, numpy_impl):
    """Return the kernel implementation matching the active backend."""
    return numba_impl if USE_NUMBA else numpy_impl
