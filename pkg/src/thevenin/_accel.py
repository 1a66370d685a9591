"""JIT switch for the numeric kernels.

Kernels are compiled with ``numba.njit`` unless ``THEVENIN_DISABLE_JIT`` is
set to a truthy value (or numba is not importable), in which case the same
functions run as plain numpy code.
"""

import os

_FLAG = os.environ.get("THEVENIN_DISABLE_JIT", "").strip().lower()
DISABLE_JIT = _FLAG not in ("", "0", "false", "no")

try:
    if DISABLE_JIT:
        raise ImportError
    import numba
except ImportError:
    numba = None

USING_NUMBA = numba is not None


def jit(f=None, **options):
    """``numba.njit`` with caching, or the identity when JIT is off."""
    options.setdefault("cache", True)

    def wrap(func):
        if numba is None:
            return func
        return numba.njit(**options)(func)

    if f is None:
        return wrap
    return wrap(f)


def python_impl(func):
    """The uncompiled body of a kernel, whichever mode is active."""
    return getattr(func, "py_func", func)
