"""Numba acceleration toggle.

Hot kernels are compiled with numba unless ADRSIM_NO_NUMBA is set (or numba
is missing), in which case the same functions run as plain Python/numpy.
Both paths execute identical source, so results are bit-for-bit equal.
"""

import os

_DISABLED = os.environ.get("ADRSIM_NO_NUMBA", "").lower() in {"1", "true", "yes"}

try:
    from numba import njit as _numba_njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and not _DISABLED


def njit(func=None, **kwargs):
    """Apply numba's njit when enabled, otherwise return the function as-is."""
    if func is None:
        return lambda f: njit(f, **kwargs)
    if USE_NUMBA:
        return _numba_njit(cache=True, **kwargs)(func)
    return func
