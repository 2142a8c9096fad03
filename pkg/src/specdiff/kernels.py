"""Selects the compiled sampling kernels, falling back to pure Python.

Set the environment variable ``SPECDIFF_NO_EXT=1`` to force the fallback
even when the compiled module is available.  Both implementations use
the same arithmetic in the same order, so paths are bit-identical either
way.
"""
import os

if os.environ.get("SPECDIFF_NO_EXT"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

USING_COMPILED = bool(_impl.COMPILED)
fold = _impl.fold
euler_path = _impl.euler_path
exact_path = _impl.exact_path
