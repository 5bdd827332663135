"""Kernel backend selection: compiled extension if available, else pure Python.

Set UAVSWARM_PURE_PYTHON=1 to force the fallback (useful for benchmarking and
for the cross-backend agreement tests).
"""

from __future__ import annotations

import os

if os.environ.get("UAVSWARM_PURE_PYTHON", "0") == "1":
    from uavswarm import _kernels_py as kernels
else:
    try:
        from uavswarm import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from uavswarm import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND: str = kernels.BACKEND
