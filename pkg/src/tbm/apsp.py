"""Kernel selection: the compiled extension when built, numpy otherwise.

Set ``TBM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _apsp_py

if os.environ.get("TBM_PURE_PYTHON"):
    _impl = _apsp_py
    BACKEND = "python"
else:
    try:
        from . import _apsp as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _apsp_py
        BACKEND = "python"

INF = _apsp_py.INF
relax_edge = _impl.relax_edge
floyd_warshall = _impl.floyd_warshall

__all__ = ["BACKEND", "INF", "relax_edge", "floyd_warshall"]
