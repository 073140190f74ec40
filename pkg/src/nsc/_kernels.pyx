# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled multiplier kernels (same semantics as ``nsc._fallback``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, cos, sin, ldexp

cnp.import_array()


cdef inline double _g(double x) nogil:
    if x <= 0.0:
        return 0.0
    return exp(-1.0 / x)


cdef inline double _chi(double r) nogil:
    cdef double a, b
    if r <= 1.0:
        return 1.0
    if r >= 2.0:
        return 0.0
    a = _g(2.0 - r)
    b = _g(r - 1.0)
    return a / (a + b)


cdef inline double _profile(double r) nogil:
    return _chi(r) - _chi(2.0 * r)


def heat(const double complex[:, ::1] c, const double[:, ::1] xi, double t):
    cdef Py_ssize_t nc = c.shape[0], m = c.shape[1], i, k
    out = np.empty((nc, m), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double k2, decay
    with nogil:
        for i in range(m):
            k2 = xi[0, i] * xi[0, i] + xi[1, i] * xi[1, i] + xi[2, i] * xi[2, i]
            decay = exp(-k2 * t)
            for k in range(nc):
                o[k, i] = c[k, i] * decay
    return out


def leray(const double complex[:, ::1] c, const double[:, ::1] xi):
    cdef Py_ssize_t m = c.shape[1], i
    out = np.empty((3, m), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double k2, inv, e1, e2, e3
    cdef double complex d
    with nogil:
        for i in range(m):
            k2 = xi[0, i] * xi[0, i] + xi[1, i] * xi[1, i] + xi[2, i] * xi[2, i]
            inv = 1.0 / sqrt(k2) if k2 > 0.0 else 0.0
            e1 = xi[0, i] * inv
            e2 = xi[1, i] * inv
            e3 = xi[2, i] * inv
            d = e1 * c[0, i] + e2 * c[1, i] + e3 * c[2, i]
            o[0, i] = c[0, i] - e1 * d
            o[1, i] = c[1, i] - e2 * d
            o[2, i] = c[2, i] - e3 * d
    return out


def stokes_coriolis(const double complex[:, ::1] c, const double[:, ::1] xi,
                    double omega, double t):
    cdef Py_ssize_t m = c.shape[1], i
    out = np.empty((3, m), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double k2, inv, e1, e2, e3, decay, phi, cs, sn
    cdef double complex c0, c1, c2, r1, r2, r3
    cdef double wt = omega * t
    with nogil:
        for i in range(m):
            k2 = xi[0, i] * xi[0, i] + xi[1, i] * xi[1, i] + xi[2, i] * xi[2, i]
            inv = 1.0 / sqrt(k2) if k2 > 0.0 else 0.0
            e1 = xi[0, i] * inv
            e2 = xi[1, i] * inv
            e3 = xi[2, i] * inv
            decay = exp(-k2 * t)
            phi = wt * e3
            cs = cos(phi)
            sn = sin(phi)
            c0 = c[0, i]
            c1 = c[1, i]
            c2 = c[2, i]
            r1 = c1 * e3 - c2 * e2
            r2 = c2 * e1 - c0 * e3
            r3 = c0 * e2 - c1 * e1
            o[0, i] = decay * (cs * c0 + sn * r1)
            o[1, i] = decay * (cs * c1 + sn * r2)
            o[2, i] = decay * (cs * c2 + sn * r3)
    return out


def shell_energy(const double complex[:, ::1] c, const double[:, ::1] xi,
                 int j_min, int j_max):
    cdef Py_ssize_t nc = c.shape[0], m = c.shape[1], i, k
    cdef int nj = j_max - j_min + 1, j
    out = np.zeros(nj, dtype=np.float64)
    cdef double[::1] o = out
    cdef double ka, p, w
    with nogil:
        for i in range(m):
            ka = sqrt(xi[0, i] * xi[0, i] + xi[1, i] * xi[1, i] + xi[2, i] * xi[2, i])
            if ka == 0.0:
                continue
            p = 0.0
            for k in range(nc):
                p = p + c[k, i].real * c[k, i].real + c[k, i].imag * c[k, i].imag
            for j in range(nj):
                w = _profile(ldexp(ka, -(j + j_min)))
                if w != 0.0:
                    o[j] += w * w * p
    return out
