"""Backend selection for the ladder-operator kernel.

The compiled extension is used when it imports; otherwise the numpy version.
Set ``COBOSIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("COBOSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"
apply_term = _impl.apply_term
