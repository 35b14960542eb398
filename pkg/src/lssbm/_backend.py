"""Numba/NumPy backend switch for the hot kernels.

Every performance-critical inner loop in :mod:`lssbm.kernels` is written once,
in loop form, and compiled with ``numba.njit`` when available.  Setting the
environment variable ``LSSBM_NO_NUMBA=1`` (or running without numba installed)
selects the pure-NumPy fallback: the same functions run uncompiled on the same
arrays.  ``benchmarks/bench_backends.py`` compares the two paths.
"""

import os

NUMBA_ENV_FLAG = "LSSBM_NO_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(NUMBA_ENV_FLAG, "0").lower() in ("1", "true", "yes")


if not _numba_disabled():
    try:
        from numba import njit as _numba_njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


if NUMBA_ENABLED:

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _numba_njit(**kwargs)
        return _numba_njit(**kwargs)(func)

else:

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
