"""Solver kernel backends.

The compiled extension is preferred when it was built; otherwise the numpy
implementation is used. Set ``SPARSEDOA_PURE_PYTHON=1`` to force the numpy
backend (used by the benchmark and the backend-equivalence tests).
"""

import os

from . import _fista_py

if os.environ.get("SPARSEDOA_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = _fista_py
else:
    try:
        from . import _fista as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fista_py

fista_mmv = _impl.fista_mmv
BACKEND = _impl.BACKEND

__all__ = ["fista_mmv", "BACKEND", "_fista_py"]
