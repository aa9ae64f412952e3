#!/usr/bin/env python3
"""Compare the compiled graph kernels against the pure-Python fallback.

The stake-weighted-center sweep is the hot loop of the analytics suite
(BFS from every candidate, thousands of graphs), so that is what we time:
once at sweep scale (many small graphs) and once on a single larger graph.

    python3 benchmarks/bench_graphcore.py [--nodes 400] [--repeat 3]
"""

import argparse
import random
import time

import numpy as np

from porsim._graphcore import get_backend


def random_csr(rng, n, extra=2.0):
    edges = set()
    for i in range(1, n):
        edges.add((rng.randrange(i), i))
    for _ in range(int(extra * n)):
        a, b = rng.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    degree = np.zeros(n + 1, dtype=np.int64)
    for a, b in edges:
        degree[a + 1] += 1
        degree[b + 1] += 1
    indptr = np.cumsum(degree)
    indices = np.zeros(int(indptr[-1]), dtype=np.int64)
    cursor = indptr[:-1].copy()
    for a, b in edges:
        indices[cursor[a]] = b
        cursor[a] += 1
        indices[cursor[b]] = a
        cursor[b] += 1
    return indptr, indices


def bench(backend, cases):
    start = time.perf_counter()
    sink = 0
    for n, indptr, indices, stakes, allowed in cases:
        sink ^= backend.weighted_center(n, indptr, indices, stakes, allowed)
    return time.perf_counter() - start, sink


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--nodes", type=int, default=400)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = random.Random(1)
    sweep_cases = []
    for _ in range(2000):  # sweep-sized workload: many graphs of <= 18 nodes
        n = rng.randint(6, 18)
        indptr, indices = random_csr(rng, n)
        stakes = np.array([rng.randint(1, 100) for _ in range(n)], dtype=np.int64)
        allowed = np.ones(n, dtype=np.uint8)
        sweep_cases.append((n, indptr, indices, stakes, allowed))

    n_big = args.nodes
    indptr, indices = random_csr(rng, n_big)
    big_case = [(
        n_big,
        indptr,
        indices,
        np.array([rng.randint(1, 100) for _ in range(n_big)], dtype=np.int64),
        np.ones(n_big, dtype=np.uint8),
    )]

    backends = {"pure": get_backend("pure")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; benchmarking pure only")

    results = {}
    for label, workload in (("2000 sweep graphs (<=18 nodes)", sweep_cases),
                            (f"1 graph with {n_big} nodes", big_case)):
        print(f"\n{label}")
        for name, backend in backends.items():
            best = min(bench(backend, workload)[0] for _ in range(args.repeat))
            results[(label, name)] = best
            print(f"  {name:>7}: {best * 1000:9.1f} ms")
        if len(backends) == 2:
            speedup = results[(label, "pure")] / results[(label, "cython")]
            print(f"  speedup: {speedup:8.1f}x")


if __name__ == "__main__":
    main()
