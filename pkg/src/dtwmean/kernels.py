"""Backend selection for the hot loops.

The compiled extension ``dtwmean._kernels`` is preferred. Setting the
environment variable ``DTWMEAN_PURE_PYTHON=1`` (or a missing build) selects
the pure-Python fallback in ``dtwmean._pykernels``.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("DTWMEAN_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def backends():
    """Return the available backend modules keyed by name."""
    found = {"python": _pykernels}
    if _compiled is not None:
        found["cython"] = _compiled
    return found


def dtw_matrix(s, t, lo, hi, backend=None):
    impl = _impl if backend is None else backends()[backend]
    return impl.dtw_matrix(
        np.ascontiguousarray(s, dtype=np.float64),
        np.ascontiguousarray(t, dtype=np.float64),
        np.ascontiguousarray(lo, dtype=np.intp),
        np.ascontiguousarray(hi, dtype=np.intp),
    )


def interval_max(values, a, b, level, backend=None):
    impl = _impl if backend is None else backends()[backend]
    return impl.interval_max(
        np.ascontiguousarray(values, dtype=np.float64), int(a), int(b), float(level)
    )
