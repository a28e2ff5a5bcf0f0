"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``ERGODIA_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("ERGODIA_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

fiber_sum = _impl.fiber_sum
fiber_gram_schmidt = _impl.fiber_gram_schmidt


def available_backends():
    """Return ``{name: module}`` for every backend that can be imported."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
