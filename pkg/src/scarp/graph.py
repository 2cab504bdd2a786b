"""Oriented-arc view of the undirected network plus all-pairs distances.

Every edge becomes two opposite arcs; arc ``2k`` keeps the file orientation
of edge ``k`` and arc ``2k+1`` is its inverse (``inv(a) == a ^ 1``).
Required edges additionally get a dense *task* numbering in file order; all
routing code works in the compact task-arc space ``0 .. 2t-1`` where
task-arc ``2j+o`` is task ``j`` in orientation ``o``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .instance import Instance


@dataclass(frozen=True)
class ArcTable:
    """All 2m oriented arcs of an instance, file order preserved."""

    tail: np.ndarray        # int32[2m]
    head: np.ndarray        # int32[2m]
    cost: np.ndarray        # float64[2m]
    demand: np.ndarray      # float64[2m]
    task_index: np.ndarray  # int32[2m], -1 when the edge is not required

    @property
    def arc_count(self) -> int:
        return len(self.tail)

    @staticmethod
    def inv(arc: int) -> int:
        return arc ^ 1


def build_arc_table(instance: Instance) -> ArcTable:
    m = len(instance.edges)
    tail = np.empty(2 * m, dtype=np.int32)
    head = np.empty(2 * m, dtype=np.int32)
    cost = np.empty(2 * m, dtype=np.float64)
    demand = np.empty(2 * m, dtype=np.float64)
    task_index = np.full(2 * m, -1, dtype=np.int32)
    task = 0
    for k, e in enumerate(instance.edges):
        tail[2 * k], head[2 * k] = e.u, e.v
        tail[2 * k + 1], head[2 * k + 1] = e.v, e.u
        cost[2 * k] = cost[2 * k + 1] = e.cost
        demand[2 * k] = demand[2 * k + 1] = e.demand
        if e.required:
            task_index[2 * k] = task_index[2 * k + 1] = task
            task += 1
    return ArcTable(tail, head, cost, demand, task_index)


class DistanceMatrix:
    """Exact shortest-path distances over node ids 1..n (+inf if unreachable)."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix  # float64[(n+1), (n+1)], row/col 0 unused

    def d(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])


def all_pairs_shortest_paths(instance: Instance) -> DistanceMatrix:
    """Dijkstra from every node over the undirected edge costs."""
    n = instance.node_count
    rows, cols, vals = [], [], []
    best: dict[tuple[int, int], float] = {}
    for e in instance.edges:
        key = (min(e.u, e.v), max(e.u, e.v))
        if key not in best or e.cost < best[key]:
            best[key] = e.cost
    for (u, v), c in best.items():
        rows.append(u)
        cols.append(v)
        vals.append(c)
    weights = csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    dist = dijkstra(weights, directed=False)
    dist[0, :] = np.inf
    dist[:, 0] = np.inf
    dist[0, 0] = 0.0
    return DistanceMatrix(np.ascontiguousarray(dist))


@dataclass(frozen=True)
class ProblemContext:
    """Immutable bundle of everything the routing kernels index into.

    Shared freely across threads; built once per instance.
    """

    instance: Instance
    arcs: ArcTable
    dist: DistanceMatrix
    task_tails: np.ndarray   # int32[2t], node at tail of task-arc
    task_heads: np.ndarray   # int32[2t]
    task_cost: np.ndarray    # float64[t], service cost per task
    task_demand: np.ndarray  # float64[t], mean demand per task
    task_edge: np.ndarray    # int32[t], owning edge index per task

    @staticmethod
    def build(instance: Instance) -> "ProblemContext":
        arcs = build_arc_table(instance)
        dist = all_pairs_shortest_paths(instance)
        req = [k for k, e in enumerate(instance.edges) if e.required]
        t = len(req)
        task_tails = np.empty(2 * t, dtype=np.int32)
        task_heads = np.empty(2 * t, dtype=np.int32)
        task_cost = np.empty(t, dtype=np.float64)
        task_demand = np.empty(t, dtype=np.float64)
        for j, k in enumerate(req):
            e = instance.edges[k]
            task_tails[2 * j], task_heads[2 * j] = e.u, e.v
            task_tails[2 * j + 1], task_heads[2 * j + 1] = e.v, e.u
            task_cost[j] = e.cost
            task_demand[j] = e.demand
        return ProblemContext(
            instance=instance,
            arcs=arcs,
            dist=dist,
            task_tails=task_tails,
            task_heads=task_heads,
            task_cost=task_cost,
            task_demand=task_demand,
            task_edge=np.asarray(req, dtype=np.int32),
        )

    @property
    def depot(self) -> int:
        return self.instance.depot

    @property
    def task_count(self) -> int:
        return len(self.task_cost)

    def task_arc_uv(self, task_arc: int) -> tuple[int, int]:
        return int(self.task_tails[task_arc]), int(self.task_heads[task_arc])

    def arc_demand(self, task_arc: int) -> float:
        return float(self.task_demand[task_arc >> 1])
