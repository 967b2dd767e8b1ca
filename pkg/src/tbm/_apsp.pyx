# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled shortest-path kernels; same contract as ``_apsp_py``."""

from libc.stdint cimport int64_t

INF = 2 ** 61
cdef int64_t C_INF = 2 ** 61


def relax_edge(int64_t[:, ::1] D, Py_ssize_t n, Py_ssize_t a, Py_ssize_t b, int64_t w):
    cdef Py_ssize_t i, j
    cdef int64_t dia, base, dbj, c
    cdef int64_t back = D[b, a]
    if back < C_INF and back + w < 0:
        return False
    if w >= C_INF:
        return True
    for i in range(n):
        dia = D[i, a]
        if dia >= C_INF:
            continue
        base = dia + w
        for j in range(n):
            dbj = D[b, j]
            if dbj >= C_INF:
                continue
            c = base + dbj
            if c < D[i, j]:
                D[i, j] = c
    return True


def floyd_warshall(int64_t[:, ::1] D, Py_ssize_t n):
    cdef Py_ssize_t i, j, k
    cdef int64_t dik, dkj, c
    for k in range(n):
        for i in range(n):
            dik = D[i, k]
            if dik >= C_INF:
                continue
            for j in range(n):
                dkj = D[k, j]
                if dkj >= C_INF:
                    continue
                c = dik + dkj
                if c < D[i, j]:
                    D[i, j] = c
    for i in range(n):
        if D[i, i] < 0:
            return False
    return True
