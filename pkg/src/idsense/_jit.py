"""JIT switch for the numeric kernels.

Kernels are written in the subset of Python that numba compiles. When numba is
missing, or ``IDSENSE_DISABLE_JIT=1`` is set before import, the decorators below
are no-ops and the kernels run as ordinary Python over numpy arrays.
"""
import os

# the bundled TBB is too old for numba; avoid the warning on first parallel compile
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_DISABLED = os.environ.get("IDSENSE_DISABLE_JIT", "0").strip().lower() not in ("", "0", "false", "no")

USE_NUMBA = numba is not None and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or the identity decorator."""
    if not USE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


if USE_NUMBA:
    prange = numba.prange
else:
    prange = range


def backend():
    return "numba" if USE_NUMBA else "python"
