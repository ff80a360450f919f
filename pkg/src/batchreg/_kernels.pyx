# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the reductions in ``_kernels_np``.

Single pass per call, no (m*n)-sized temporaries.  Semantics and argument
shapes match the numpy module exactly; ``kappa`` may be ``inf``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _dot(const double[:, :, ::1] x, Py_ssize_t b, Py_ssize_t i,
                        const double[::1] w, Py_ssize_t d) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(d):
        s += x[b, i, j] * w[j]
    return s


def abs_residual_means(const double[:, :, ::1] x, const double[:, ::1] y,
                       const double[::1] w):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], d = x.shape[2]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, i
    cdef double acc
    with nogil:
        for b in range(m):
            acc = 0.0
            for i in range(n):
                acc += fabs(_dot(x, b, i, w, d) - y[b, i])
            out[b] = acc / n
    return out_arr


def clipped_loss_means(const double[:, :, ::1] x, const double[:, ::1] y,
                       const double[::1] w, double kappa):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], d = x.shape[2]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b, i
    cdef double acc, r, a
    with nogil:
        for b in range(m):
            acc = 0.0
            for i in range(n):
                r = _dot(x, b, i, w, d) - y[b, i]
                a = fabs(r)
                if a <= kappa:
                    acc += 0.5 * r * r
                else:
                    acc += kappa * a - 0.5 * kappa * kappa
            out[b] = acc / n
    return out_arr


def clipped_grad_means(const double[:, :, ::1] x, const double[:, ::1] y,
                       const double[::1] w, double kappa):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], d = x.shape[2]
    out_arr = np.zeros((m, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, i, j
    cdef double r
    with nogil:
        for b in range(m):
            for i in range(n):
                r = _dot(x, b, i, w, d) - y[b, i]
                if r > kappa:
                    r = kappa
                elif r < -kappa:
                    r = -kappa
                for j in range(d):
                    out[b, j] += r * x[b, i, j]
            for j in range(d):
                out[b, j] /= n
    return out_arr


def weighted_loss_grad(const double[:, :, ::1] x, const double[:, ::1] y,
                       const double[::1] p, const double[::1] w, double kappa):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], d = x.shape[2]
    grad_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t b, i, j
    cdef double loss = 0.0, batch_loss, r, a, c, scale
    with nogil:
        for b in range(m):
            if p[b] == 0.0:
                continue
            batch_loss = 0.0
            scale = p[b] / n
            for i in range(n):
                r = _dot(x, b, i, w, d) - y[b, i]
                a = fabs(r)
                if a <= kappa:
                    batch_loss += 0.5 * r * r
                    c = r
                else:
                    batch_loss += kappa * a - 0.5 * kappa * kappa
                    c = kappa if r > 0 else -kappa
                for j in range(d):
                    grad[j] += scale * c * x[b, i, j]
            loss += batch_loss * scale
    return loss, grad_arr
