"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is imported. Set ``DTCSIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("DTCSIM_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

rk4_bloch = _impl.rk4_bloch
two_site_update = _impl.two_site_update

__all__ = ["BACKEND", "rk4_bloch", "two_site_update"]
