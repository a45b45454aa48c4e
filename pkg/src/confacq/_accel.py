"""Selects between numba-compiled kernels and the pure-numpy fallbacks.

Set ``CONFACQ_DISABLE_NUMBA=1`` to force the numpy path even when numba is
installed. The choice is made once, at import time.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("CONFACQ_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` in nopython mode if numba is importable, else return it as is.

    The loop kernels stay callable without numba (slowly), which lets the test
    suite compare both paths on small inputs regardless of the flag.
    """
    if not HAS_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
