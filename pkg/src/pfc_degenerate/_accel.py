"""Selection between the numba-compiled kernels and the pure-numpy fallback.

The choice is made once at import time from the ``PFC_DISABLE_NUMBA``
environment variable (``1``/``true``/``yes`` disables compilation).  When numba
is not importable the numpy path is used unconditionally.
"""

import os

_FLAG = os.environ.get("PFC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def threads():
    """Worker cap from ``PFC_THREADS`` (defaults to 1)."""
    raw = os.environ.get("PFC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"PFC_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"PFC_THREADS must be a positive integer, got {raw!r}")
    return value
