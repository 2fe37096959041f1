"""Pure-Python shortest-augmenting-path assignment solver.

Reference implementation of the O(n^3) dual-potential method (the
Jonker-Volgenant family): one Dijkstra-style augmentation per row over the
reduced-cost graph.  The Cython module ``_sap_cy`` implements the identical
algorithm; this twin is the import-time fallback and the ground truth the
extension is tested against.
"""

from __future__ import annotations

import numpy as np


def solve_min(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment of a square matrix.

    Returns ``row_to_col``: column assigned to each row.
    """
    c = np.asarray(cost, dtype=np.float64)
    n = c.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)  # row potentials (index n is the virtual row slot)
    v = np.zeros(n + 1)  # column potentials (index n is the virtual column)
    col_to_row = np.full(n + 1, n, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for row in range(n):
        col_to_row[n] = row
        j0 = n
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
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
    row_to_col[col_to_row[:n]] = np.arange(n)
    return row_to_col
