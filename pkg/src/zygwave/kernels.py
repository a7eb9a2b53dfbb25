"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy fallback is used. Set ``ZYGWAVE_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("ZYGWAVE_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _scalar_array(f, ndim):
    f = np.asarray(f)
    dtype = np.complex128 if np.iscomplexobj(f) else np.float64
    f = np.ascontiguousarray(f, dtype=dtype)
    if f.ndim != ndim:
        raise ValueError(f"expected a {ndim}D array, got shape {f.shape}")
    return f


def second_difference_sup(f, shifts, periodic=True):
    return _impl.second_difference_sup(_scalar_array(f, 1), np.asarray(shifts), periodic)


def first_difference_sup(f, shifts, periodic=True):
    return _impl.first_difference_sup(_scalar_array(f, 1), np.asarray(shifts), periodic)


def second_difference_sup_2d(f, tshifts, xshifts):
    return _impl.second_difference_sup_2d(
        _scalar_array(f, 2), np.asarray(tshifts), np.asarray(xshifts)
    )


def convolve_reflect(values, weights, rows=None):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return _impl.convolve_reflect(values, weights, rows)


def use_backend(name):
    """Switch backend at runtime (``"python"`` or ``"cython"``); used by benchmarks."""
    global _impl, BACKEND
    if name == "python":
        _impl = _kernels_py
    elif name == "cython":
        from . import _kernels as compiled  # type: ignore[attr-defined]

        _impl = compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
