"""Kernel backend selection.

The compiled extension is used when it imports; set
``WFCNAV_PURE_PYTHON=1`` to force the reference implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("WFCNAV_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

TRAVERSABLE = _kernels_py.TRAVERSABLE
BLOCKED = _kernels_py.BLOCKED
OUT_OF_FIELD = _kernels_py.OUT_OF_FIELD

bilinear_sample = _impl.bilinear_sample
traversal_codes = _impl.traversal_codes
wfc_solve = _impl.wfc_solve
