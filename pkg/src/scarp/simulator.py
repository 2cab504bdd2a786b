"""Replication engine: sampled demands, depot recourse, robustness statistics.

Demands are sampled from truncated Gaussians by rejection (clipping would
pile mass on the bounds and distort the variance).  Execution follows the
planned trips; whenever the accumulated realized load plus the next task's
realized demand would exceed the capacity, the vehicle detours
current-position -> depot -> next task, empties, and resumes the plan.

Replications use independent RNG streams keyed by (seed, replication
index), and statistics aggregate in replication order, so results do not
depend on how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .graph import ProblemContext
from .instance import Instance
from .solution import Solution
from .stochastic import demand_laws

DEMAND_FLOOR = 1.0


class SimulationError(ValueError):
    """Demand model or execution contract violated."""


@dataclass(frozen=True)
class Scenario:
    """One joint realization of all task demands, indexed by task."""

    realized_demand: np.ndarray  # float64[t]


@dataclass(frozen=True)
class ExecutionResult:
    cost: float
    trips: int
    failures: tuple[tuple[int, int], ...]  # (trip index, task position)


@dataclass(frozen=True)
class ReplicationStats:
    mean_cost: float
    mean_trips: float
    extra_trip_rate: float   # fraction of replications with >= 1 failure
    std_cost: float
    std_trips: float
    variability: float       # std_cost / mean_cost
    n: int


def sample_scenario(instance: Instance, k_noise: float,
                    rng: np.random.Generator,
                    ctx: ProblemContext | None = None) -> Scenario:
    """Draw one demand per task from its truncated law (rejection sampling)."""
    if ctx is None:
        ctx = ProblemContext.build(instance)
    means = ctx.task_demand
    floor_bad = means < DEMAND_FLOOR
    if floor_bad.any():
        tasks = np.nonzero(floor_bad)[0].tolist()
        raise SimulationError(
            f"tasks {tasks} have mean demand below the truncation floor "
            f"{DEMAND_FLOOR}; the demand law is undefined")
    laws = demand_laws(ctx, k_noise)
    if k_noise == 0.0:
        return Scenario(realized_demand=means.copy())
    sigmas = np.array([law.sigma for law in laws])
    lows = np.array([law.lower for law in laws])
    highs = np.array([law.upper for law in laws])
    values = rng.normal(means, sigmas)
    bad = (values < lows) | (values > highs)
    while bad.any():
        idx = np.nonzero(bad)[0]
        values[idx] = rng.normal(means[idx], sigmas[idx])
        bad = (values < lows) | (values > highs)
    return Scenario(realized_demand=values)


def execute_with_recourse(solution: Solution, scenario: Scenario,
                          ctx: ProblemContext,
                          capacity: float | None = None) -> ExecutionResult:
    """Run one scenario through the planned trips with depot recourse."""
    cap = ctx.instance.capacity if capacity is None else capacity
    D = ctx.dist.matrix
    depot = ctx.depot
    demands = scenario.realized_demand
    extra = 0.0
    failures: list[tuple[int, int]] = []
    for ti, trip in enumerate(solution.trips):
        load = 0.0
        for pos, arc in enumerate(trip.tasks):
            realized = float(demands[arc >> 1])
            if realized > cap:
                raise SimulationError(
                    f"realized demand {realized} exceeds capacity {cap}; "
                    "truncation contract violated")
            if load + realized > cap:
                prev = depot if pos == 0 else int(ctx.task_heads[trip.tasks[pos - 1]])
                b = int(ctx.task_tails[arc])
                extra += float(D[prev, depot] + D[depot, b] - D[prev, b])
                failures.append((ti, pos))
                load = 0.0
            load += realized
    return ExecutionResult(
        cost=solution.det_cost + extra,
        trips=solution.trip_count + len(failures),
        failures=tuple(failures),
    )


def _scenario_matrix(instance: Instance, ctx: ProblemContext, k_noise: float,
                     n: int, seed: int) -> np.ndarray:
    rows = np.empty((n, ctx.task_count), dtype=np.float64)
    for rep in range(n):
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
        rows[rep] = sample_scenario(instance, k_noise, rng, ctx).realized_demand
    return rows


def replicate(solution: Solution, instance: Instance, k_noise: float, n: int,
              seed: int, ctx: ProblemContext | None = None,
              dump_path: str | Path | None = None) -> ReplicationStats:
    """n independent replications of ``solution``; sample statistics.

    Standard deviations use the n-1 denominator.  ``dump_path`` optionally
    writes one CSV row per replication (index, cost, trips, failures).
    """
    if n < 2:
        raise SimulationError("replication needs n >= 2")
    if ctx is None:
        ctx = ProblemContext.build(instance)
    scen = _scenario_matrix(instance, ctx, k_noise, n, seed)
    flat = np.asarray(solution.task_arcs(), dtype=np.int32)
    bounds = []
    total = 0
    for trip in solution.trips:
        total += len(trip.tasks)
        bounds.append(total)
    costs, trips, fails = _kernels.execute_batch(
        flat, bounds, ctx.task_tails, ctx.task_heads, ctx.task_cost,
        ctx.task_demand, ctx.dist.matrix, ctx.depot, instance.capacity, scen)
    costs = np.asarray(costs, dtype=np.float64)
    trips = np.asarray(trips, dtype=np.float64)
    fails = np.asarray(fails, dtype=np.int64)
    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8") as fh:
            fh.write("replication,cost,trips,failures\n")
            for rep in range(n):
                fh.write(f"{rep},{costs[rep]!r},{int(trips[rep])},{int(fails[rep])}\n")
    mean_cost = float(np.mean(costs))
    return ReplicationStats(
        mean_cost=mean_cost,
        mean_trips=float(np.mean(trips)),
        extra_trip_rate=float(np.count_nonzero(fails > 0)) / n,
        std_cost=float(np.std(costs, ddof=1)),
        std_trips=float(np.std(trips, ddof=1)),
        variability=float(np.std(costs, ddof=1)) / mean_cost,
        n=n,
    )


def exact_expectation_oracle(solution: Solution,
                             discrete_laws: Mapping[int, Sequence[tuple[float, float]]],
                             ctx: ProblemContext,
                             capacity: float | None = None) -> tuple[float, float]:
    """Exhaustive expectation over finitely-supported demand laws.

    ``discrete_laws`` maps each task index to (value, probability) pairs.
    Enumerates every joint scenario through :func:`execute_with_recourse`;
    intended as a test oracle, refuses state spaces above 10^6.
    """
    t = ctx.task_count
    supports = []
    for task in range(t):
        law = discrete_laws[task]
        total_p = sum(p for _v, p in law)
        if abs(total_p - 1.0) > 1e-9:
            raise SimulationError(f"law of task {task} sums to {total_p}, not 1")
        supports.append(tuple(law))
    space = 1
    for law in supports:
        space *= len(law)
        if space > 10**6:
            raise SimulationError("joint support exceeds 10^6 scenarios")
    mean_cost = 0.0
    mean_trips = 0.0
    demands = np.empty(t, dtype=np.float64)

    def recurse(task: int, prob: float):
        nonlocal mean_cost, mean_trips
        if task == t:
            result = execute_with_recourse(
                solution, Scenario(realized_demand=demands.copy()), ctx,
                capacity=capacity)
            mean_cost += prob * result.cost
            mean_trips += prob * result.trips
            return
        for value, p in supports[task]:
            demands[task] = value
            recurse(task + 1, prob * p)

    recurse(0, 1.0)
    return mean_cost, mean_trips
