"""Numpy implementation of the batched kernels (used when the extension is absent)."""

import numpy as np

# family codes shared with the compiled extension
EXP, SIN, COS, SINH, COSH, POLY, RELU, LEAKY = range(8)


def _apply(code, coeffs, slope, t):
    if code == EXP:
        return np.exp(t)
    if code == SIN:
        return np.sin(t)
    if code == COS:
        return np.cos(t)
    if code == SINH:
        return np.sinh(t)
    if code == COSH:
        return np.cosh(t)
    if code == POLY:
        out = np.full_like(t, coeffs[-1])
        for c in coeffs[-2::-1]:
            out = out * t + c
        return out
    if code == RELU:
        return np.maximum(t, 0.0)
    return np.where(t >= 0, t, slope * t)


def shallow_forward(code, coeffs, slope, a, wc, b, pts):
    """``sum_k a_k sigma(wc_k . z + b_k)`` for every row ``z`` of ``pts``.

    ``wc`` already holds the conjugated inner weights.
    """
    pre = pts @ wc.T + b
    return _apply(code, coeffs, slope, pre) @ a
