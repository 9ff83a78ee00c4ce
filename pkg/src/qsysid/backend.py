"""Selection of the compiled or pure-python backend for hot loops.

The sampling kernels are written once as plain functions and compiled with
numba when it is importable and not disabled. Setting ``QSYSID_NO_NUMBA=1``
in the environment (before the package is imported) forces the pure-numpy
path. Both paths consume the same ``numpy.random.Generator`` bit streams,
so results are bit-identical across backends.
"""

from __future__ import annotations

import os


def _env_disabled() -> bool:
    return os.environ.get("QSYSID_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _env_disabled():
        raise ImportError("numba disabled by QSYSID_NO_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def maybe_jit(fn):
    """Compile ``fn`` with ``@njit(cache=True)`` when the numba backend is
    active; otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """Return the interpreted implementation behind a possibly-jitted function."""
    return getattr(fn, "py_func", fn)
