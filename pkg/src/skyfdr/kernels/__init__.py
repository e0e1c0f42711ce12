"""Hot per-pixel kernels.

Two interchangeable implementations live side by side: ``_numba`` (``@njit``
loops) and ``_numpy`` (vectorised numpy / pure Python).  The active one is
chosen once at import time.  Set ``SKYFDR_DISABLE_JIT=1`` to force the numpy
path, e.g. when numba is unavailable or to compare outputs.
"""

import os

from . import _numpy

BACKEND = "numpy"
_impl = _numpy

if os.environ.get("SKYFDR_DISABLE_JIT", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba missing
        pass
    else:
        _impl = _numba
        BACKEND = "numba"

weighted_merge = _impl.weighted_merge
bilinear_sample = _impl.bilinear_sample
compensated_sum = _impl.compensated_sum
erode = _impl.erode
dilate = _impl.dilate
rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode

__all__ = [
    "BACKEND",
    "weighted_merge",
    "bilinear_sample",
    "compensated_sum",
    "erode",
    "dilate",
    "rle_encode",
    "rle_decode",
]


def implementations():
    """Return ``{name: module}`` for every importable backend."""
    impls = {"numpy": _numpy}
    try:
        from . import _numba as nb_impl
    except ImportError:  # pragma: no cover
        return impls
    impls["numba"] = nb_impl
    return impls
