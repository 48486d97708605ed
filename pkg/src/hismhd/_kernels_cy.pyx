# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused pointwise kernels for the solver hot path.

Each function mirrors a _kernels_py fallback; the fusion avoids the
temporaries numpy would allocate for the same expressions.
"""


def cross3(double[:, ::1] a, double[:, ::1] b, double[:, ::1] out):
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t i
    cdef double a0, a1, a2, b0, b1, b2
    with nogil:
        for i in range(n):
            a0 = a[0, i]; a1 = a[1, i]; a2 = a[2, i]
            b0 = b[0, i]; b1 = b[1, i]; b2 = b[2, i]
            out[0, i] = a1 * b2 - a2 * b1
            out[1, i] = a2 * b0 - a0 * b2
            out[2, i] = a0 * b1 - a1 * b0
    return out.base if out.base is not None else out


def dot_grad3(double[:, ::1] vel, double[:, :, ::1] grad, double[:, ::1] out):
    cdef Py_ssize_t n = vel.shape[1]
    cdef Py_ssize_t i
    cdef double v0, v1, v2
    with nogil:
        for i in range(n):
            v0 = vel[0, i]; v1 = vel[1, i]; v2 = vel[2, i]
            out[0, i] = v0 * grad[0, 0, i] + v1 * grad[1, 0, i] + v2 * grad[2, 0, i]
            out[1, i] = v0 * grad[0, 1, i] + v1 * grad[1, 1, i] + v2 * grad[2, 1, i]
            out[2, i] = v0 * grad[0, 2, i] + v1 * grad[1, 2, i] + v2 * grad[2, 2, i]
    return out.base if out.base is not None else out


def mul_inplace(double complex[:, ::1] spec, double[::1] weight):
    cdef Py_ssize_t m = spec.shape[0]
    cdef Py_ssize_t n = spec.shape[1]
    cdef Py_ssize_t l, i
    with nogil:
        for l in range(m):
            for i in range(n):
                spec[l, i] = spec[l, i] * weight[i]
    return spec.base if spec.base is not None else spec
