"""Optional numba acceleration.

Hot kernels are written once in the numpy subset that numba understands and
wrapped with :func:`kernel`.  Setting ``CYCLOPIP_DISABLE_NUMBA=1`` (or running
without numba installed) leaves them as plain Python over numpy arrays, which
is slower but gives identical results.
"""
import os

_DISABLED = os.environ.get("CYCLOPIP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by environment")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def kernel(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when numba is enabled."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn
