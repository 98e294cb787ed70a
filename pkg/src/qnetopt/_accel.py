"""Numba dispatch for the hot kernels.

Every kernel in this package is written as a plain numpy loop and decorated
with :func:`njit`.  When numba is importable and the environment variable
``QNETOPT_NO_NUMBA`` is unset (or falsy), the decorator is numba's real
``njit`` and the loops are JIT-compiled.  Otherwise the decorator is a
no-op and the same code runs as pure Python/numpy.  Kernels take all of
their randomness as pre-drawn arrays, so the two paths produce bit-identical
results; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

_FALSY = ("", "0", "false", "no", "off")


def _numba_requested() -> bool:
    return os.environ.get("QNETOPT_NO_NUMBA", "").strip().lower() in _FALSY


USING_NUMBA = False

if _numba_requested():
    try:
        from numba import njit as _numba_njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

if USING_NUMBA:

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        if func is None:
            return _numba_njit(**kwargs)
        return _numba_njit(**kwargs)(func)

else:

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func


def accel_mode() -> str:
    """Human-readable name of the active kernel path."""
    return "numba" if USING_NUMBA else "numpy"
