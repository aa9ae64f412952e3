"""Pure-Python graph kernels: BFS components and the stake-weighted center.

Same contract as the compiled module in ``_speedups.pyx``; selected at import
time by ``porsim._graphcore`` when the extension is unavailable.

Graphs arrive as CSR adjacency (``indptr``/``indices``), node ids already
mapped to dense indices by the caller.
"""

from __future__ import annotations

BACKEND_NAME = "pure"


def component_labels(n, indptr, indices):
    """Label connected components 0,1,... in discovery order of node index."""
    indptr = list(indptr)
    indices = list(indices)
    labels = [-1] * n
    label = 0
    queue = [0] * n
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = label
        queue[0] = start
        head, tail = 0, 1
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(indptr[v], indptr[v + 1]):
                u = indices[j]
                if labels[u] < 0:
                    labels[u] = label
                    queue[tail] = u
                    tail += 1
        label += 1
    return labels


def weighted_center(n, indptr, indices, stakes, allowed):
    """Index minimizing sum(dist(u, v) * stakes[u]) over allowed nodes.

    Only nodes with ``allowed[v]`` truthy are candidates and only allowed
    nodes contribute to the sum; unreachable allowed pairs contribute nothing
    (callers restrict ``allowed`` to one component). Ties break toward the
    smallest index. Returns -1 when no candidate exists.
    """
    indptr = list(indptr)
    indices = list(indices)
    stakes = list(stakes)
    allowed = list(allowed)
    best = -1
    best_cost = None
    dist = [-1] * n
    queue = [0] * n
    for v in range(n):
        if not allowed[v]:
            continue
        for i in range(n):
            dist[i] = -1
        dist[v] = 0
        queue[0] = v
        head, tail = 0, 1
        cost = 0
        while head < tail:
            x = queue[head]
            head += 1
            d = dist[x]
            if x != v and allowed[x]:
                cost += d * stakes[x]
            for j in range(indptr[x], indptr[x + 1]):
                u = indices[j]
                if dist[u] < 0:
                    dist[u] = d + 1
                    queue[tail] = u
                    tail += 1
        if best_cost is None or cost < best_cost:
            best = v
            best_cost = cost
    return best
