"""Trips, solutions and the optimal giant-tour split.

A giant tour is a delimiter-free permutation of oriented task arcs; the
split procedure segments it into capacity-feasible trips by a shortest
path over the segment DAG (weights supplied by the active objective) and
is optimal over all consecutive segmentations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from . import _kernels
from .graph import ProblemContext

if TYPE_CHECKING:
    from .objectives import ObjectiveSpec


class SolutionError(ValueError):
    """Invalid tour or trip data."""


@dataclass(frozen=True)
class GiantTour:
    """Permutation of task arcs; every task appears in exactly one orientation."""

    sequence: tuple[int, ...]

    def validate(self, ctx: ProblemContext) -> None:
        t = ctx.task_count
        if len(self.sequence) != t:
            raise SolutionError(f"tour has {len(self.sequence)} arcs, expected {t}")
        seen = set()
        for a in self.sequence:
            if not (0 <= a < 2 * t):
                raise SolutionError(f"task arc {a} out of range")
            if a >> 1 in seen:
                raise SolutionError(f"task {a >> 1} appears more than once")
            seen.add(a >> 1)


@dataclass(frozen=True)
class Trip:
    tasks: tuple[int, ...]   # task-arc ids, service order
    load: float              # sum of mean demands
    det_cost: float          # service + connecting paths + depot legs


@dataclass(frozen=True)
class Solution:
    trips: tuple[Trip, ...]
    det_cost: float          # deterministic solution cost
    trip_count: int

    def task_arcs(self) -> list[int]:
        out: list[int] = []
        for trip in self.trips:
            out.extend(trip.tasks)
        return out


def evaluate_trip(tasks: Sequence[int], ctx: ProblemContext) -> Trip:
    """Exact deterministic cost and load of one task sequence."""
    if not tasks:
        raise SolutionError("trip must service at least one task")
    det, load, _sq2, _p, _s = _kernels.seq_stats(
        list(tasks), ctx.task_tails, ctx.task_heads, ctx.task_cost,
        ctx.task_demand, ctx.dist.matrix, ctx.depot,
        ctx.instance.capacity, 0.0)
    return Trip(tasks=tuple(int(a) for a in tasks), load=load, det_cost=det)


def solution_from_trips(task_lists: Iterable[Sequence[int]],
                        ctx: ProblemContext) -> Solution:
    trips = tuple(evaluate_trip(tasks, ctx) for tasks in task_lists)
    h = 0.0
    for trip in trips:
        h = h + trip.det_cost
    return Solution(trips=trips, det_cost=h, trip_count=len(trips))


def split(tour: GiantTour, objective: "ObjectiveSpec",
          ctx: ProblemContext) -> Solution:
    """Optimally segment ``tour`` into trips under ``objective``.

    Raises :class:`SolutionError` when a single task exceeds the effective
    capacity (no segmentation exists).
    """
    tour.validate(ctx)
    arr = np.asarray(tour.sequence, dtype=np.int32)
    try:
        bounds, _weight = _kernels.split(
            arr, ctx.task_tails, ctx.task_heads, ctx.task_cost,
            ctx.task_demand, ctx.dist.matrix, ctx.depot,
            objective.effective_capacity(ctx.instance.capacity),
            ctx.instance.capacity, objective.k_noise,
            *objective.split_codes())
    except ValueError as exc:
        raise SolutionError(str(exc)) from exc
    task_lists = []
    b = 0
    for e in bounds:
        task_lists.append([int(a) for a in tour.sequence[b:e]])
        b = e
    return solution_from_trips(task_lists, ctx)


def concat(solution: Solution) -> GiantTour:
    """Giant tour obtained by concatenating the trips in trip order."""
    return GiantTour(sequence=tuple(solution.task_arcs()))


def serialize_solution(solution: Solution, ctx: ProblemContext) -> str:
    """Text form: header with cost and trip count, one trip per line."""
    lines = [f"cost {solution.det_cost!r} trips {solution.trip_count}"]
    for trip in solution.trips:
        lines.append(" ".join(
            "{}->{}".format(*ctx.task_arc_uv(a)) for a in trip.tasks))
    return "\n".join(lines) + "\n"


def parse_solution(text: str, ctx: ProblemContext) -> Solution:
    """Inverse of :func:`serialize_solution`.

    Oriented ``u->v`` entries resolve to the first unused required edge with
    those endpoints, in file order (relevant only for parallel edges).
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("cost"):
        raise SolutionError("missing solution header")
    used = [False] * ctx.task_count
    task_lists: list[list[int]] = []
    for ln in lines[1:]:
        tasks = []
        for token in ln.split():
            u_s, _, v_s = token.partition("->")
            u, v = int(u_s), int(v_s)
            arc = _resolve_arc(u, v, used, ctx)
            if arc is None:
                raise SolutionError(f"no unused required edge matches {token}")
            used[arc >> 1] = True
            tasks.append(arc)
        if tasks:
            task_lists.append(tasks)
    if not all(used):
        missing = [j for j, u in enumerate(used) if not u]
        raise SolutionError(f"solution misses tasks {missing}")
    return solution_from_trips(task_lists, ctx)


def _resolve_arc(u: int, v: int, used: list[bool], ctx: ProblemContext) -> int | None:
    for j in range(ctx.task_count):
        if used[j]:
            continue
        tu, tv = int(ctx.task_tails[2 * j]), int(ctx.task_heads[2 * j])
        if (tu, tv) == (u, v):
            return 2 * j
        if (tv, tu) == (u, v):
            return 2 * j + 1
    return None


def check_coverage(solution: Solution, ctx: ProblemContext) -> None:
    """Assert each required edge is serviced exactly once, one orientation."""
    seen = [0] * ctx.task_count
    for trip in solution.trips:
        for a in trip.tasks:
            seen[a >> 1] += 1
    bad = [j for j, c in enumerate(seen) if c != 1]
    if bad:
        raise SolutionError(f"tasks serviced a wrong number of times: {bad}")
