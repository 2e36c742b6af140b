"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
twins are used. Set ``MSDGR_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

NAME = "python"
kernels = _pykernels

if os.environ.get("MSDGR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        NAME = "cython"
        kernels = _ckernels


def get(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
