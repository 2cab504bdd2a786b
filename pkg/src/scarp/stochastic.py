"""Closed-form robustness mathematics for Gaussian task demands.

Demands are independent truncated Gaussians with mean ``q`` and standard
deviation ``k_noise * q``.  Under the two working hypotheses (at most one
capacity failure per trip, occurring just before the last serviced arc)
expectation and variance of the recourse cost have exact expressions;
everything here evaluates those expressions using the *untruncated*
Gaussian sum, which is also what the derivation uses.  Truncation only
affects the simulator's sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .graph import ProblemContext
from .solution import Solution, Trip

SQRT2 = 1.4142135623730951


@dataclass(frozen=True)
class DemandLaw:
    """Truncated Gaussian demand: N(mean, (k_noise*mean)^2) restricted to [lower, upper]."""

    mean: float
    sigma: float
    lower: float = 1.0
    upper: float = float("inf")

    def __post_init__(self):
        if self.mean <= 0:
            raise ValueError(f"demand mean must be positive, got {self.mean}")
        if self.sigma < 0:
            raise ValueError(f"demand sigma must be nonnegative, got {self.sigma}")
        if not (self.lower <= self.mean <= self.upper):
            raise ValueError(
                f"demand mean {self.mean} outside truncation range "
                f"[{self.lower}, {self.upper}]")

    @staticmethod
    def from_mean(mean: float, k_noise: float, capacity: float) -> "DemandLaw":
        return DemandLaw(mean=mean, sigma=k_noise * mean, lower=1.0, upper=capacity)


def demand_laws(ctx: ProblemContext, k_noise: float) -> tuple[DemandLaw, ...]:
    """One truncated-Gaussian law per task, in task order."""
    capacity = ctx.instance.capacity
    return tuple(DemandLaw.from_mean(float(q), k_noise, capacity)
                 for q in ctx.task_demand)


@dataclass(frozen=True)
class TripRobustness:
    failure_prob: float   # P{trip load exceeds capacity}
    detour_cost: float    # extra cost of the recourse move, relative to the plan
    mean_cost: float      # det_cost + detour_cost * failure_prob
    var_cost: float       # detour_cost^2 * failure_prob * (1 - failure_prob)


@dataclass(frozen=True)
class SolutionRobustness:
    mean_cost: float
    var_cost: float
    std_cost: float
    mean_trips: float
    var_trips: float
    std_trips: float
    prob_extra_trip: float  # P{at least one extra trip}


def std_normal_cdf(x: float) -> float:
    """Cumulative distribution of N(0,1)."""
    return 0.5 * math.erfc(-x / SQRT2)


def trip_failure_probability(trip: Trip, k_noise: float, capacity: float,
                             ctx: ProblemContext) -> float:
    """P{sum of the trip's Gaussian demands > capacity}.

    The degenerate law (k_noise = 0) returns 0 below capacity and the
    limit value 0.5 exactly at capacity.
    """
    sum_q = 0.0
    sum_q2 = 0.0
    for a in trip.tasks:
        q = float(ctx.task_demand[a >> 1])
        sum_q += q
        sum_q2 += q * q
    if k_noise == 0.0:
        if sum_q < capacity:
            return 0.0
        if sum_q == capacity:
            return 0.5
        return 1.0
    return 1.0 - std_normal_cdf((capacity - sum_q) / (k_noise * math.sqrt(sum_q2)))


def trip_detour_cost(trip: Trip, ctx: ProblemContext) -> float:
    """Cost of the recourse move inserted before the trip's last task.

    The vehicle leaves from the head of the second-to-last task, unloads at
    the depot and rejoins the tail of the last task; the detour cost is the
    excess over the planned connection.  Single-task trips have no position
    before the last arc distinct from the depot departure, so their detour
    cost is 0.
    """
    if len(trip.tasks) < 2:
        return 0.0
    d = ctx.dist.matrix
    depot = ctx.depot
    a = int(ctx.task_heads[trip.tasks[-2]])
    b = int(ctx.task_tails[trip.tasks[-1]])
    return float(d[a, depot] + d[depot, b] - d[a, b])


def trip_robustness(trip: Trip, k_noise: float, capacity: float,
                    ctx: ProblemContext, failure_prob: float | None = None,
                    ) -> TripRobustness:
    p = trip_failure_probability(trip, k_noise, capacity, ctx) \
        if failure_prob is None else failure_prob
    s = trip_detour_cost(trip, ctx)
    return TripRobustness(
        failure_prob=p,
        detour_cost=s,
        mean_cost=trip.det_cost + s * p,
        var_cost=s * s * (p - p * p),
    )


def solution_robustness(solution: Solution, k_noise: float, capacity: float,
                        ctx: ProblemContext,
                        trip_failure_probs: Sequence[float] | None = None,
                        ) -> SolutionRobustness:
    """Aggregate the per-trip closed forms over a whole solution.

    ``trip_failure_probs`` substitutes externally computed failure
    probabilities (e.g. exact values for discrete demand laws); the
    aggregation algebra is identical.
    """
    mean_cost = solution.det_cost
    var_cost = 0.0
    mean_trips = float(solution.trip_count)
    var_trips = 0.0
    none_fails = 1.0
    for j, trip in enumerate(solution.trips):
        p = None if trip_failure_probs is None else float(trip_failure_probs[j])
        tr = trip_robustness(trip, k_noise, capacity, ctx, failure_prob=p)
        mean_cost += tr.detour_cost * tr.failure_prob
        var_cost += tr.var_cost
        mean_trips += tr.failure_prob
        var_trips += tr.failure_prob - tr.failure_prob * tr.failure_prob
        none_fails *= 1.0 - tr.failure_prob
    return SolutionRobustness(
        mean_cost=mean_cost,
        var_cost=var_cost,
        std_cost=math.sqrt(var_cost),
        mean_trips=mean_trips,
        var_trips=var_trips,
        std_trips=math.sqrt(var_trips),
        prob_extra_trip=1.0 - none_fails,
    )


def prob_extra_exceeds(p_list: Sequence[float], m: int) -> float:
    """P{number of failed trips > m} for independent failures ``p_list``.

    Exact Poisson-binomial dynamic program over the trips; ``m = 0``
    reduces to 1 - prod(1 - p_j).
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    for p in p_list:
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability {p} outside [0, 1]")
    dp = [0.0] * (m + 1)
    dp[0] = 1.0
    tail = 0.0
    for p in p_list:
        q = 1.0 - p
        tail = tail + dp[m] * p
        for k in range(m, 0, -1):
            dp[k] = dp[k] * q + dp[k - 1] * p
        dp[0] = dp[0] * q
    return tail
