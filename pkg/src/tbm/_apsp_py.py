"""Numpy implementation of the shortest-path kernels.

Matrices are square ``int64`` arrays where ``D[i, j]`` is the least upper
bound on ``t_j - t_i``; ``INF`` marks an absent bound.  Only the leading
``n x n`` block is live.
"""

import numpy as np

INF = 2 ** 61


def relax_edge(D, n, a, b, w):
    """Fold the bound ``t_b - t_a <= w`` into the closed matrix ``D`` in place.

    Returns False, leaving ``D`` untouched, when the bound closes a negative
    cycle.
    """
    back = D[b, a]
    if back < INF and back + w < 0:
        return False
    if w >= INF:
        return True
    live = D[:n, :n]
    col = live[:, a]
    row = live[b, :]
    ok = (col < INF)[:, None] & (row < INF)[None, :]
    cand = col[:, None] + w + row[None, :]
    np.minimum(live, np.where(ok, cand, INF), out=live)
    return True


def floyd_warshall(D, n):
    """Close ``D`` in place; returns False if a negative cycle exists."""
    live = D[:n, :n]
    for k in range(n):
        col = live[:, k]
        row = live[k, :]
        ok = (col < INF)[:, None] & (row < INF)[None, :]
        cand = col[:, None] + row[None, :]
        np.minimum(live, np.where(ok, cand, INF), out=live)
    return bool((np.diagonal(live) >= 0).all())
