"""Backend selection for the hot kernels.

Compiled kernels are the default.  Setting SPHERE_OT_NO_NUMBA=1 (or running
without numba installed) selects the pure-numpy fallbacks instead; both
paths are exercised by the test suite and compared by benchmarks/.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("SPHERE_OT_NO_NUMBA", "0") == "1"

if not _DISABLED:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False
else:
    HAS_NUMBA = False

if not HAS_NUMBA:

    def njit(*args, **kwargs):  # noqa: D103 - identity decorator fallback
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend_name() -> str:
    return "numba" if HAS_NUMBA else "numpy"
