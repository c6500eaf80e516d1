# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_fallback.py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


def keyed_uniform(master_seed, realization, stream, coords):
    cdef const int64_t[:, ::1] c = np.ascontiguousarray(coords, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0], d = c.shape[1], i, k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t mask = 0xFFFFFFFFFFFFFFFFULL
    cdef uint64_t base = _mix(<uint64_t>(master_seed & mask))
    base = _mix(base ^ <uint64_t>(realization & mask))
    base = _mix(base ^ <uint64_t>(stream & mask))
    cdef uint64_t h
    with nogil:
        for i in range(n):
            h = base
            for k in range(d):
                h = _mix(h ^ <uint64_t>c[i, k])
            o[i] = <double>(h >> 11) * INV53
    return out


cdef inline double _norm_sq_real(double a, double b, double c, double d) nogil:
    cdef double fro = a * a + b * b + c * c + d * d
    cdef double det = a * d - b * c
    cdef double disc = fro * fro - 4.0 * det * det
    if disc < 0.0:
        disc = 0.0
    return 0.5 * (fro + sqrt(disc))


def weighted_block_norms(v1, v2, weights, bounds):
    cdef const double[:, ::1] p1 = np.ascontiguousarray(v1, dtype=np.float64)
    cdef const double[:, ::1] p2 = np.ascontiguousarray(v2, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const int64_t[::1] bnd = np.ascontiguousarray(bounds, dtype=np.int64)
    cdef Py_ssize_t n = p1.shape[0], nc = w.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] q = out
    cdef Py_ssize_t cl, j, y, x, a, b
    cdef double wc, m00, m01, m10, m11, ay, ax
    cdef double[::1] amp = np.empty(n, dtype=np.float64)
    with nogil:
        for cl in range(nc):
            wc = w[cl]
            if wc == 0.0:
                continue
            a = bnd[cl]
            b = bnd[cl + 1]
            if b - a == 1:
                for y in range(n):
                    amp[y] = sqrt(p1[y, a] * p1[y, a] + p2[y, a] * p2[y, a])
                for y in range(n):
                    ay = wc * amp[y]
                    for x in range(n):
                        q[y, x] += ay * amp[x]
                continue
            for y in range(n):
                for x in range(n):
                    m00 = 0.0
                    m01 = 0.0
                    m10 = 0.0
                    m11 = 0.0
                    for j in range(a, b):
                        m00 += p1[y, j] * p1[x, j]
                        m01 += p1[y, j] * p2[x, j]
                        m10 += p2[y, j] * p1[x, j]
                        m11 += p2[y, j] * p2[x, j]
                    q[y, x] += wc * sqrt(_norm_sq_real(m00, m01, m10, m11))
    return out


def sup_block_norm_sq(amps, best):
    cdef double complex[:, :, :] A = amps
    cdef double[::1] bst = best
    cdef Py_ssize_t nt = A.shape[0], n = bst.shape[0], t, y
    cdef double complex m00, m01, m10, m11, det
    cdef double fro, dd, disc, val
    with nogil:
        for t in range(nt):
            for y in range(n):
                m00 = A[t, y, 0]
                m01 = A[t, y, 1]
                m10 = A[t, n + y, 0]
                m11 = A[t, n + y, 1]
                fro = (m00.real * m00.real + m00.imag * m00.imag
                       + m01.real * m01.real + m01.imag * m01.imag
                       + m10.real * m10.real + m10.imag * m10.imag
                       + m11.real * m11.real + m11.imag * m11.imag)
                det = m00 * m11 - m01 * m10
                dd = det.real * det.real + det.imag * det.imag
                disc = fro * fro - 4.0 * dd
                if disc < 0.0:
                    disc = 0.0
                val = 0.5 * (fro + sqrt(disc))
                if val > bst[y]:
                    bst[y] = val
