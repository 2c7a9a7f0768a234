"""Numba switch.

Hot kernels are written twice: a numba ``@njit`` version and a plain numpy
version.  ``KINEBODY_DISABLE_NUMBA=1`` (or a missing numba install) selects
the numpy path.  ``KINEBODY_THREADS`` caps numba's thread pool.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() not in _FALSEY


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _env_flag("KINEBODY_DISABLE_NUMBA")

if HAS_NUMBA and os.environ.get("KINEBODY_THREADS"):
    try:
        numba.set_num_threads(max(1, min(int(os.environ["KINEBODY_THREADS"]), numba.config.NUMBA_NUM_THREADS)))
    except ValueError:
        pass


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or an identity decorator without numba."""
    kwargs.setdefault("cache", True)
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda fn: fn
