# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def class_rank_sums(const double[:, ::1] scores, const cnp.intp_t[::1] labels,
                    Py_ssize_t n_classes):
    cdef Py_ssize_t n = scores.shape[0], k = scores.shape[1]
    cdef Py_ssize_t j, s, e, t
    cdef cnp.int64_t rank2
    cdef double v
    out_arr = np.zeros((n_classes, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    if n == 0:
        return out_arr
    order_arr = np.ascontiguousarray(np.argsort(np.asarray(scores), axis=0, kind="stable").T)
    cdef const cnp.intp_t[:, ::1] order = order_arr
    for j in range(k):
        s = 0
        while s < n:
            v = scores[order[j, s], j]
            e = s + 1
            while e < n and scores[order[j, e], j] == v:
                e += 1
            # block occupies 1-based ranks s+1..e; twice the average rank
            rank2 = s + 1 + e
            for t in range(s, e):
                out[labels[order[j, t]], j] += rank2
            s = e
    return out_arr


def hungarian_max(const double[:, ::1] weights):
    cdef Py_ssize_t n = weights.shape[0]
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    p_arr = np.zeros(n + 1, dtype=np.intp)
    way_arr = np.zeros(n + 1, dtype=np.intp)
    minv_arr = np.empty(n + 1)
    used_arr = np.empty(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef cnp.intp_t[::1] p = p_arr, way = way_arr
    cdef cnp.uint8_t[::1] used = used_arr
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = -weights[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    perm = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


def confusion_counts(const cnp.intp_t[::1] true, const cnp.intp_t[::1] pred, Py_ssize_t k):
    cdef Py_ssize_t i, n = true.shape[0]
    out_arr = np.zeros((k, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    for i in range(n):
        out[true[i], pred[i]] += 1
    return out_arr
