"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the three hot routines (giant-tour split, local search, batched
recourse execution) on a mid-size instance with both backends and prints
per-call times and speedups.  The two backends return bit-identical
results; this script asserts that on every measured call.

Usage: python benchmarks/bench_kernels.py [--tasks N] [--repeats K]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from scarp._kernels import available_backends
from scarp.graph import ProblemContext
from scarp.instance import Edge, Instance


def random_instance(rng, n_nodes, extra_edges, capacity):
    edges, seen = [], set()
    order = rng.permutation(n_nodes) + 1
    for i in range(1, n_nodes):
        u, v = int(order[i]), int(order[rng.integers(0, i)])
        seen.add((min(u, v), max(u, v)))
        edges.append(Edge(u, v, float(rng.integers(1, 11)),
                          float(rng.integers(1, int(capacity) + 1))))
    while len(edges) < n_nodes - 1 + extra_edges:
        u = int(rng.integers(1, n_nodes + 1))
        v = int(rng.integers(1, n_nodes + 1))
        key = (min(u, v), max(u, v))
        if u == v or key in seen:
            continue
        seen.add(key)
        edges.append(Edge(u, v, float(rng.integers(1, 11)),
                          float(rng.integers(1, int(capacity) + 1))))
    return Instance(name="bench", node_count=n_nodes, depot=1,
                    capacity=capacity, edges=tuple(edges))


def random_tour(rng, t):
    return (2 * rng.permutation(t) + rng.integers(0, 2, t)).astype(np.int32)


def time_call(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--tasks", type=int, default=40)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--replications", type=int, default=1000)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not available; nothing to compare")
        return 1

    rng = np.random.default_rng(7)
    n_nodes = max(6, args.tasks // 3)
    inst = random_instance(rng, n_nodes=n_nodes,
                           extra_edges=max(0, args.tasks - n_nodes + 1),
                           capacity=20.0)
    ctx = ProblemContext.build(inst)
    t = ctx.task_count
    tour = random_tour(rng, t)
    argpack = (ctx.task_tails, ctx.task_heads, ctx.task_cost, ctx.task_demand,
               ctx.dist.matrix, ctx.depot)
    law = (1, 1, 10.0)          # mean + 10 * std surrogate weights
    cons = (0, 0.0, 0)
    bounds, _w = backends["pure"].split(tour, *argpack, 20.0, 20.0, 0.15, *law)
    scen = rng.uniform(1.0, 20.0, size=(args.replications, t))

    cases = {
        "split": lambda mod: mod.split(tour, *argpack, 20.0, 20.0, 0.15, *law),
        "local_search": lambda mod: mod.local_search(
            tour, list(bounds), *argpack, 20.0, 20.0, 0.15, *law, *cons, 20),
        "execute_batch": lambda mod: mod.execute_batch(
            tour, list(bounds), *argpack, 20.0, scen),
    }

    print(f"instance: {t} tasks, {inst.node_count} nodes; "
          f"{args.replications} replications; best of {args.repeats} calls")
    print(f"{'kernel':<15} {'pure':>12} {'compiled':>12} {'speedup':>9}")
    for name, call in cases.items():
        times = {}
        results = {}
        for backend_name, mod in backends.items():
            times[backend_name], results[backend_name] = time_call(
                lambda m=mod: call(m), args.repeats)
        if name == "execute_batch":
            same = all(
                (np.asarray(a) == np.asarray(b)).all()
                for a, b in zip(results["pure"], results["compiled"]))
        else:
            same = tuple(map(_canon, results["pure"])) == tuple(
                map(_canon, results["compiled"]))
        assert same, f"{name}: backends disagree"
        print(f"{name:<15} {times['pure'] * 1e3:>10.3f}ms "
              f"{times['compiled'] * 1e3:>10.3f}ms "
              f"{times['pure'] / times['compiled']:>8.1f}x")
    return 0


def _canon(x):
    if isinstance(x, list):
        return tuple(int(v) if isinstance(v, (int, np.integer)) else v for v in x)
    return float(x) if isinstance(x, (float, np.floating)) else x


if __name__ == "__main__":
    sys.exit(main())
