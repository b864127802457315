# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Pegasos inner loops. Mirrors textguard._kernels_py exactly."""

from libc.math cimport sqrt

cdef double RESCALE_BELOW = 1e-9


cdef inline void _rescale(double[::1] v, double s) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(v.shape[0]):
        v[j] *= s


def pegasos_dense(const double[:, ::1] X, const double[::1] y, const long long[:, ::1] orders,
                  double lam, double[::1] w):
    """Binary Pegasos over dense rows; writes weights into ``w`` and returns the bias.

    The bias is a constant-1 feature and is shrunk along with ``w``.
    """
    cdef Py_ssize_t n_epochs = orders.shape[0], n = orders.shape[1], d = X.shape[1]
    cdef Py_ssize_t e, k, i, j
    cdef double s = 1.0, b = 0.0, eta, margin, dot, factor, coef
    cdef long long t = 0
    with nogil:
        for j in range(d):
            w[j] = 0.0
        for e in range(n_epochs):
            for k in range(n):
                i = orders[e, k]
                t += 1
                eta = 1.0 / (lam * t)
                dot = 0.0
                for j in range(d):
                    dot = dot + w[j] * X[i, j]
                margin = y[i] * (s * (dot + b))
                factor = 1.0 - eta * lam
                if factor <= 0.0:
                    for j in range(d):
                        w[j] = 0.0
                    b = 0.0
                    s = 1.0
                else:
                    s = s * factor
                if margin < 1.0:
                    coef = eta * y[i] / s
                    for j in range(d):
                        w[j] = w[j] + coef * X[i, j]
                    b = b + coef
                if s < RESCALE_BELOW:
                    _rescale(w, s)
                    b = b * s
                    s = 1.0
        _rescale(w, s)
    return b * s


def pegasos_sparse(const double[::1] data, const int[::1] indices, const int[::1] indptr,
                   const double[::1] y, const long long[:, ::1] orders, double lam, double[::1] w):
    """Binary Pegasos over CSR rows; same update as :func:`pegasos_dense`."""
    cdef Py_ssize_t n_epochs = orders.shape[0], n = orders.shape[1], d = w.shape[0]
    cdef Py_ssize_t e, k, i, j, p
    cdef double s = 1.0, b = 0.0, eta, margin, dot, factor, coef
    cdef long long t = 0
    with nogil:
        for j in range(d):
            w[j] = 0.0
        for e in range(n_epochs):
            for k in range(n):
                i = orders[e, k]
                t += 1
                eta = 1.0 / (lam * t)
                dot = 0.0
                for p in range(indptr[i], indptr[i + 1]):
                    dot = dot + w[indices[p]] * data[p]
                margin = y[i] * (s * (dot + b))
                factor = 1.0 - eta * lam
                if factor <= 0.0:
                    for j in range(d):
                        w[j] = 0.0
                    b = 0.0
                    s = 1.0
                else:
                    s = s * factor
                if margin < 1.0:
                    coef = eta * y[i] / s
                    for p in range(indptr[i], indptr[i + 1]):
                        w[indices[p]] = w[indices[p]] + coef * data[p]
                    b = b + coef
                if s < RESCALE_BELOW:
                    _rescale(w, s)
                    b = b * s
                    s = 1.0
        _rescale(w, s)
    return b * s
