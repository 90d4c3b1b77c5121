"""JIT switch for the numeric kernels.

Every kernel in :mod:`boundfire.kernels` is decorated with :func:`njit` from this
module.  By default that is ``numba.njit``; setting ``BOUNDFIRE_PURE_NUMPY=1``
(or running without numba installed) turns the decorator into a thin wrapper
that executes the same source as plain Python over numpy arrays.  Both paths
consume the same random streams, so results are bit-identical.
"""

import functools
import os

import numpy as np

_FLAG = os.environ.get("BOUNDFIRE_PURE_NUMPY", "0").strip().lower()
PURE_NUMPY = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    PURE_NUMPY = True

BACKEND = "numpy" if PURE_NUMPY else "numba"


def njit(func=None, **kwargs):
    """Compile ``func`` with numba, or wrap it for the pure-numpy path."""
    if func is None:
        return lambda f: njit(f, **kwargs)
    if PURE_NUMPY:
        @functools.wraps(func)
        def wrapper(*args):
            # uint64 hashing relies on wraparound; silence numpy's scalar warnings
            with np.errstate(over="ignore"):
                return func(*args)

        wrapper.py_func = func
        return wrapper
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)
    return numba.njit(**opts)(func)
