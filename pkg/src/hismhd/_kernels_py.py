"""Pure-numpy fallback for the fused pointwise kernels.

Same signatures as the compiled extension; all arrays are C-contiguous with
the grid flattened into the last axis.
"""

import numpy as np


def cross3(a, b, out):
    """out = a x b for real vector fields of shape (3, npoints)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    np.multiply(a1, b2, out=out[0])
    out[0] -= a2 * b1
    np.multiply(a2, b0, out=out[1])
    out[1] -= a0 * b2
    np.multiply(a0, b1, out=out[2])
    out[2] -= a1 * b0
    return out


def dot_grad3(vel, grad, out):
    """out_i = sum_j vel_j * grad[j, i] for shapes (3,n), (3,3,n), (3,n)."""
    for i in range(3):
        np.multiply(vel[0], grad[0, i], out=out[i])
        out[i] += vel[1] * grad[1, i]
        out[i] += vel[2] * grad[2, i]
    return out


def mul_inplace(spec, weight):
    """spec[l, :] *= weight for complex spec (m, n) and real weight (n)."""
    spec *= weight
    return spec
