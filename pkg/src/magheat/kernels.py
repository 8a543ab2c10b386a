"""Kernel selection: the compiled extension if it is importable, else numpy.

Set ``MAGHEAT_PURE=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("MAGHEAT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

sturm_counts = _impl.sturm_counts
tridiag_solve = _impl.tridiag_solve
cn_step = _impl.cn_step

__all__ = ["BACKEND", "sturm_counts", "tridiag_solve", "cn_step"]
