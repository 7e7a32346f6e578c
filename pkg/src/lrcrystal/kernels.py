"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``LRCRYSTAL_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("LRCRYSTAL_PURE"):
        raise ImportError("pure mode requested")
    from . import _kernels as _impl
    COMPILED = True
except ImportError:
    _impl = _fallback
    COMPILED = False

shell_sums = _impl.shell_sums
descend = _impl.descend
exhaustive_min = _impl.exhaustive_min

__all__ = ["COMPILED", "shell_sums", "descend", "exhaustive_min"]
