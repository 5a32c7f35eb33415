"""Backend selection for the hot numeric kernels.

Numba is used when it imports and ``TOKCOMP_DISABLE_NUMBA`` is unset (or
``0``/``false``).  Otherwise every kernel falls back to its numpy twin.
"""
from __future__ import annotations

import os

_FLAG = "TOKCOMP_DISABLE_NUMBA"


def _flag_set() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba as _numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _flag_set()
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, else identity."""
    if not HAS_NUMBA:
        return func
    return _numba.njit(cache=True)(func)
