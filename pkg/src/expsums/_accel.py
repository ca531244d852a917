"""Backend selection for the compiled kernels.

Set ``EXPSUMS_BACKEND=numpy`` (or ``EXPSUMS_NO_JIT=1``) before import to force
the pure-numpy code paths.  Otherwise numba is used when it can be imported.
"""

import os

_requested = os.environ.get("EXPSUMS_BACKEND", "").strip().lower()
_no_jit = os.environ.get("EXPSUMS_NO_JIT", "").strip() not in ("", "0")

if _requested == "numpy" or _no_jit:
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise.

    Kernels decorated this way are importable either way; with numba absent
    they run as plain (slow) Python loops and are only used by tests that
    compare them against the numpy versions.
    """
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
