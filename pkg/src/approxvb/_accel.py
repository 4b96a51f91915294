"""Numba dispatch.

Kernels are compiled with numba when it is importable and the environment
variable ``APPROXVB_DISABLE_NUMBA`` is unset (or ``0``).  Otherwise callers
take the pure numpy / python fallback path.
"""

from __future__ import annotations

import os

_flag = os.environ.get("APPROXVB_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - depends on environment
    _numba = None

USE_NUMBA = _numba is not None


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` or an identity decorator when numba is off."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)
