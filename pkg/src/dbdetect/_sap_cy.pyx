# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython shortest-augmenting-path assignment solver.

Same dual-potential O(n^3) algorithm as ``_sap_py``; typed memoryviews and C
loops make it the hot-path backend for the scan detector inside Monte-Carlo
sweeps.
"""

import numpy as np


def solve_min(cost):
    """Minimum-cost perfect assignment; returns the row -> column mapping."""
    c_arr = np.ascontiguousarray(cost, dtype=np.float64)
    cdef double[:, ::1] c = c_arr
    cdef Py_ssize_t n = c.shape[0]

    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    col_to_row_arr = np.full(n + 1, n, dtype=np.int64)
    way_arr = np.zeros(n + 1, dtype=np.int64)
    minv_arr = np.empty(n + 1)
    used_arr = np.zeros(n + 1, dtype=np.uint8)

    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef long long[::1] col_to_row = col_to_row_arr
    cdef long long[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr

    cdef Py_ssize_t row, i0, j, j0, j1
    cdef double inf = np.inf
    cdef double delta, cur

    for row in range(n):
        col_to_row[n] = row
        j0 = n
        for j in range(n + 1):
            minv[j] = inf
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = col_to_row[j0]
            delta = inf
            j1 = -1
            for j in range(n):
                if used[j]:
                    continue
                cur = c[i0, j] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[col_to_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if col_to_row[j0] == n:
                break
        while j0 != n:
            j1 = way[j0]
            col_to_row[j0] = col_to_row[j1]
            j0 = j1

    row_to_col = np.empty(n, dtype=np.int64)
    row_to_col[col_to_row_arr[:n]] = np.arange(n)
    return row_to_col
