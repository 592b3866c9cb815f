"""Backend selection for the hot evaluation kernels.

The compiled extension is used when it was built; setting the environment
variable ``NETCONSTRUCT_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

_FAMILY_CODES = {
    "exp": _kernels_py.EXP,
    "sin": _kernels_py.SIN,
    "cos": _kernels_py.COS,
    "sinh": _kernels_py.SINH,
    "cosh": _kernels_py.COSH,
    "polynomial": _kernels_py.POLY,
    "relu": _kernels_py.RELU,
    "leaky_relu": _kernels_py.LEAKY,
}

try:
    if os.environ.get("NETCONSTRUCT_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _ext
except ImportError:
    _ext = None

BACKEND = "cython" if _ext is not None else "python"


def available_backends():
    return ("cython", "python") if _ext is not None else ("python",)


def shallow_forward(activation, a, wc, b, pts, backend=None):
    """Evaluate a shallow network on the rows of ``pts``.

    ``wc`` holds conjugated inner weights, so the pre-activation is the
    plain product ``wc @ z + b``.
    """
    backend = backend or BACKEND
    code = _FAMILY_CODES[activation.family]
    complex_field = np.iscomplexobj(a)
    dtype = np.complex128 if complex_field else np.float64
    coeffs = np.asarray(activation.coeffs or (0.0,), dtype=dtype)
    pts = np.ascontiguousarray(pts, dtype=dtype)
    if backend == "python" or _ext is None:
        if backend == "cython":
            raise RuntimeError("compiled kernels are not available")
        return _kernels_py.shallow_forward(code, coeffs, activation.slope, a, wc, b, pts)
    a = np.ascontiguousarray(a, dtype=dtype)
    wc = np.ascontiguousarray(wc, dtype=dtype)
    b = np.ascontiguousarray(b, dtype=dtype)
    if complex_field:
        return _ext.shallow_forward_complex(code, coeffs, a, wc, b, pts)
    return _ext.shallow_forward_real(code, coeffs, float(activation.slope), a, wc, b, pts)
