# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled graph kernels; mirrors porsim._graphcore._pure."""

import numpy as np

BACKEND_NAME = "cython"


def component_labels(Py_ssize_t n, indptr, indices):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    out = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] labels = out
    cdef long long[::1] queue = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t start, head, tail, j
    cdef long long v, u, label = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = label
        queue[0] = start
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(ip[v], ip[v + 1]):
                u = ix[j]
                if labels[u] < 0:
                    labels[u] = label
                    queue[tail] = u
                    tail += 1
        label += 1
    return out.tolist()


def weighted_center(Py_ssize_t n, indptr, indices, stakes, allowed):
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef long long[::1] st = np.ascontiguousarray(stakes, dtype=np.int64)
    cdef unsigned char[::1] ok = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef long long[::1] dist = np.empty(n, dtype=np.int64)
    cdef long long[::1] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t v, i, head, tail, j
    cdef long long x, u, d, cost
    cdef long long best = -1
    cdef long long best_cost = 0
    cdef bint have_best = False
    for v in range(n):
        if not ok[v]:
            continue
        for i in range(n):
            dist[i] = -1
        dist[v] = 0
        queue[0] = v
        head = 0
        tail = 1
        cost = 0
        while head < tail:
            x = queue[head]
            head += 1
            d = dist[x]
            if x != v and ok[x]:
                cost += d * st[x]
            for j in range(ip[x], ip[x + 1]):
                u = ix[j]
                if dist[u] < 0:
                    dist[u] = d + 1
                    queue[tail] = u
                    tail += 1
        if not have_best or cost < best_cost:
            best = v
            best_cost = cost
            have_best = True
    return int(best)
