"""Compiled inner loops over CSR adjacency arrays."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def bfs_distances(indptr, indices, source):
    """Hop distance from ``source`` to every vertex; -1 where unreachable."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True, nogil=True)
def distance_sum(indptr, indices):
    """Sum of d(u, v) over ordered pairs, and the number of reachable pairs."""
    n = indptr.shape[0] - 1
    total = 0
    pairs = 0
    for s in range(n):
        dist = bfs_distances(indptr, indices, s)
        for v in range(n):
            if dist[v] > 0:
                total += dist[v]
                pairs += 1
    return total, pairs


@njit(cache=True, nogil=True)
def brandes(indptr, indices):
    """Shortest-path betweenness summed over ordered (source, target) pairs."""
    n = indptr.shape[0] - 1
    bc = np.zeros(n, dtype=np.float64)
    sigma = np.zeros(n, dtype=np.float64)
    delta = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    # shortest-path DAG edges (v -> w) in the order BFS pops v
    dag_v = np.empty(indices.shape[0], dtype=np.int64)
    dag_w = np.empty(indices.shape[0], dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        m = 0
        while head < tail:
            v = order[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    dag_v[m] = v
                    dag_w[m] = w
                    m += 1
        # reversed pop order finalises delta[w] before any edge into w is used
        for e in range(m - 1, -1, -1):
            v = dag_v[e]
            w = dag_w[e]
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
        for idx in range(1, tail):
            w = order[idx]
            bc[w] += delta[w]
    return bc


@njit(cache=True, nogil=True)
def bfs_path_counts(indptr, indices, source):
    """Hop distances and numbers of shortest paths from ``source``."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n, dtype=np.float64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    sigma[source] = 1.0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue[tail] = w
                tail += 1
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
    return dist, sigma


@njit(cache=True, nogil=True)
def pick_parents(indptr, indices, dist, weight, u):
    """For each vertex, draw a neighbour one hop closer to the root.

    Candidate ``c`` is chosen with probability proportional to
    ``weight[c]`` using the uniform variate ``u[v]``. Roots (distance 0)
    point to themselves; unreachable vertices get -1.
    """
    n = indptr.shape[0] - 1
    parent = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        dv = dist[v]
        if dv == 0:
            parent[v] = v
            continue
        if dv < 0:
            continue
        total = 0.0
        for k in range(indptr[v], indptr[v + 1]):
            if dist[indices[k]] == dv - 1:
                total += weight[indices[k]]
        threshold = u[v] * total
        acc = 0.0
        for k in range(indptr[v], indptr[v + 1]):
            c = indices[k]
            if dist[c] == dv - 1:
                acc += weight[c]
                parent[v] = c
                if acc > threshold:
                    break
    return parent
