"""Kernel backend selection.

The compiled extension is preferred when it imports; setting HISMHD_PURE=1
in the environment forces the numpy fallback (used by the benchmark and the
fallback tests). Either backend produces bit-identical results.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("HISMHD_PURE"):
    _backend = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _backend

        BACKEND = "cython"
    except ImportError:
        _backend = _kernels_py
        BACKEND = "python"


def _flat2(a):
    return a.reshape(a.shape[0], -1)


def cross_real(a, b, out=None):
    """Pointwise cross product of real (3, ...) fields."""
    if out is None:
        out = np.empty_like(a)
    _backend.cross3(_flat2(a), _flat2(b), _flat2(out))
    return out


def dot_grad(vel, grad, out=None):
    """(vel . grad) contraction: out_i = sum_j vel_j grad[j, i] pointwise."""
    if out is None:
        out = np.empty_like(vel)
    _backend.dot_grad3(_flat2(vel), grad.reshape(3, 3, -1), _flat2(out))
    return out


def scale_spectral(spec, weight):
    """In-place multiply of complex coefficients by a real weight array.

    `weight` matches the trailing grid shape; leading axes of `spec` (vector
    components) broadcast over it.
    """
    flat = spec.reshape(-1, weight.size)
    _backend.mul_inplace(flat, weight.reshape(-1))
    return spec
