"""Optional numba acceleration for hot numeric kernels.

Every kernel in this package is written as a plain numpy function and wrapped
with :func:`maybe_njit`.  With numba available (the default) the kernels are
JIT-compiled; setting the environment variable ``CABANDITS_DISABLE_NUMBA=1``
selects the pure-numpy fallback path, which runs the identical source
uncompiled.  Both paths produce bit-identical results.
"""
from __future__ import annotations

import os


def _flag_set(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


NUMBA_ENABLED = False
if not _flag_set("CABANDITS_DISABLE_NUMBA"):
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def maybe_njit(*jit_args, **jit_kwargs):
    """``numba.njit`` when acceleration is on, identity decorator otherwise."""

    def wrap(fn):
        if NUMBA_ENABLED:
            import numba

            jit_kwargs.setdefault("cache", True)
            return numba.njit(fn, **jit_kwargs)
        return fn

    if jit_args and callable(jit_args[0]):
        return wrap(jit_args[0])
    return wrap


def kernel_source(fn):
    """Return the uncompiled python function behind a (possibly jitted) kernel."""
    return getattr(fn, "py_func", fn)
