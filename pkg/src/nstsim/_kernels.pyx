# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, floor, log2

cnp.import_array()

COND_EXP = 0
COND_RAT = 1


cdef inline double _g(double diff, double kappa, int cond) nogil:
    cdef double r = diff / kappa
    r = r * r
    if cond == 0:
        return exp(-r)
    return 1.0 / (1.0 + r)


def pm_diffuse(u_in, int iterations, double kappa, double dt, int cond):
    cdef double[:, ::1] src = np.array(u_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef double[:, ::1] dst = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] fx = np.zeros((h, w + 1), dtype=np.float64)
    cdef double[:, ::1] fy = np.zeros((h + 1, w), dtype=np.float64)
    cdef double[:, ::1] tmp
    cdef Py_ssize_t y, x
    cdef int it
    cdef double d
    for it in range(iterations):
        with nogil:
            for y in range(h):
                for x in range(w - 1):
                    d = src[y, x + 1] - src[y, x]
                    fx[y, x + 1] = _g(fabs(d), kappa, cond) * d
            for y in range(h - 1):
                for x in range(w):
                    d = src[y + 1, x] - src[y, x]
                    fy[y + 1, x] = _g(fabs(d), kappa, cond) * d
            for y in range(h):
                for x in range(w):
                    dst[y, x] = src[y, x] + dt * ((fx[y, x + 1] - fx[y, x]) + (fy[y + 1, x] - fy[y, x]))
        tmp = src
        src = dst
        dst = tmp
    return np.asarray(src)


def glcm_counts(codes, int levels, int dx, int dy):
    cdef const cnp.intp_t[:, ::1] q = np.ascontiguousarray(codes, dtype=np.intp)
    cdef Py_ssize_t h = q.shape[0], w = q.shape[1]
    out = np.zeros((levels, levels), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] c = out
    cdef Py_ssize_t y0 = max(0, -dy), y1 = h - max(0, dy)
    cdef Py_ssize_t x0 = max(0, -dx), x1 = w - max(0, dx)
    cdef Py_ssize_t y, x
    with nogil:
        for y in range(y0, y1):
            for x in range(x0, x1):
                c[q[y, x], q[y + dy, x + dx]] += 1
    return out


cdef inline double _entropy(cnp.int32_t* counts, Py_ssize_t* cells, Py_ssize_t ncells, double n) nogil:
    cdef double acc = 0.0, c
    cdef Py_ssize_t t
    for t in range(ncells):
        c = counts[cells[t]]
        acc += c * log2(c)
    return log2(n) - acc / n


def patch_mi(patches_in, int bins):
    cdef const double[:, ::1] p = np.ascontiguousarray(patches_in, dtype=np.float64)
    cdef Py_ssize_t k = p.shape[0], m = p.shape[1]
    mi_arr = np.zeros((k, k), dtype=np.float64)
    hf_arr = np.zeros((k, k), dtype=np.float64)
    cdef double[:, ::1] mi = mi_arr
    cdef double[:, ::1] hf = hf_arr
    cdef double[::1] mins = np.min(np.asarray(p), axis=1)
    cdef double[::1] maxs = np.max(np.asarray(p), axis=1)
    cdef cnp.int32_t[::1] ci = np.zeros(bins, dtype=np.int32)
    cdef cnp.int32_t[::1] cj = np.zeros(bins, dtype=np.int32)
    cdef cnp.int32_t[::1] cij = np.zeros(bins * bins, dtype=np.int32)
    cdef Py_ssize_t[::1] ti = np.zeros(bins, dtype=np.intp)
    cdef Py_ssize_t[::1] tj = np.zeros(bins, dtype=np.intp)
    cdef Py_ssize_t[::1] tij = np.zeros(m, dtype=np.intp)
    cdef Py_ssize_t[::1] qi = np.zeros(m, dtype=np.intp)
    cdef Py_ssize_t[::1] qj = np.zeros(m, dtype=np.intp)
    cdef Py_ssize_t i, j, s, t, ni, nj, nij, cell
    cdef double lo, hi, span, v, hi_, hj_, hij, value, n = <double>m
    with nogil:
        for i in range(k):
            for j in range(i, k):
                lo = mins[i] if mins[i] < mins[j] else mins[j]
                hi = maxs[i] if maxs[i] > maxs[j] else maxs[j]
                span = hi - lo
                for s in range(m):
                    if span > 0:
                        v = floor((p[i, s] - lo) * bins / span)
                        qi[s] = <Py_ssize_t>v if v < bins - 1 else bins - 1
                        v = floor((p[j, s] - lo) * bins / span)
                        qj[s] = <Py_ssize_t>v if v < bins - 1 else bins - 1
                    else:
                        qi[s] = 0
                        qj[s] = 0
                ni = 0
                nj = 0
                nij = 0
                for s in range(m):
                    if ci[qi[s]] == 0:
                        ti[ni] = qi[s]
                        ni += 1
                    ci[qi[s]] += 1
                    if cj[qj[s]] == 0:
                        tj[nj] = qj[s]
                        nj += 1
                    cj[qj[s]] += 1
                    cell = qi[s] * bins + qj[s]
                    if cij[cell] == 0:
                        tij[nij] = cell
                        nij += 1
                    cij[cell] += 1
                hi_ = _entropy(&ci[0], &ti[0], ni, n)
                if i == j:
                    mi[i, i] = hi_
                    hf[i, i] = hi_
                else:
                    hj_ = _entropy(&cj[0], &tj[0], nj, n)
                    hij = _entropy(&cij[0], &tij[0], nij, n)
                    value = hi_ + hj_ - hij
                    if value < 0.0:
                        value = 0.0
                    mi[i, j] = value
                    mi[j, i] = value
                    hf[i, j] = hi_
                    hf[j, i] = hj_
                for t in range(ni):
                    ci[ti[t]] = 0
                for t in range(nj):
                    cj[tj[t]] = 0
                for t in range(nij):
                    cij[tij[t]] = 0
    return mi_arr, hf_arr
