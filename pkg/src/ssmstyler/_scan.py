"""Scan backend selection: compiled extension if built, numpy otherwise.

Set SSMSTYLER_NO_EXT=1 to force the pure-Python kernels (e.g. for the
backend-comparison benchmark or debugging).
"""

import os

from . import _scan_numpy

BACKEND = "numpy"
scan_forward = _scan_numpy.scan_forward
scan_backward = _scan_numpy.scan_backward

if not os.environ.get("SSMSTYLER_NO_EXT"):
    try:
        from . import _scan_ext

        scan_forward = _scan_ext.scan_forward
        scan_backward = _scan_ext.scan_backward
        BACKEND = "cython"
    except ImportError:
        pass
