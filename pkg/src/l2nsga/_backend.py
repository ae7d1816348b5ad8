"""Kernel backend selection.

``L2NSGA_BACKEND=numpy`` forces the pure-numpy kernels; anything else (or
unset) uses numba when it imports cleanly.
"""

import os
import warnings

from l2nsga import _kernels_numpy

BACKEND_ENV = "L2NSGA_BACKEND"


def _select():
    wanted = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if wanted == "numpy":
        return "numpy", _kernels_numpy
    if wanted != "numba":
        warnings.warn(f"unknown {BACKEND_ENV}={wanted!r}; using numba", stacklevel=2)
    try:
        from l2nsga import _kernels_numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return "numpy", _kernels_numpy
    return "numba", _kernels_numba


name, kernels = _select()
