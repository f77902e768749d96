"""Selects the tilted-bank reduction backend at import time.

The compiled extension is preferred; setting ``MEDIV_PURE_PYTHON=1`` or a
missing build falls back to the numpy implementation.
"""

import os

from . import _tilt_py

if os.environ.get("MEDIV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _tilt_py
    BACKEND = "python"
else:
    try:
        from . import _tilt as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _tilt_py
        BACKEND = "python"

tilt_stats = _impl.tilt_stats
tilt_means = _impl.tilt_means

__all__ = ["BACKEND", "tilt_stats", "tilt_means"]
