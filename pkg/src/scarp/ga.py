"""Hybrid genetic algorithm over giant-tour chromosomes.

A chromosome is a giant tour evaluated through the optimal split; the
population is kept sorted by fitness and clone-free (no two members with
the same fitness value).  Each iteration selects two parents by binary
tournament, applies the modified order crossover, keeps one child at
random, mutates it by local search with probability ``pm`` and replaces a
random member of the worse half of the population.

Random draw order per iteration is fixed (4 tournament draws, 2 cut
ranks, 1 child-keep bit, 1 victim index, 1 mutation coin) so a run is
fully determined by (instance, objective, parameters, seed).
"""

from __future__ import annotations

import math
import time
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import ProblemContext
from .objectives import ObjectiveSpec, fitness
from .solution import GiantTour, Solution, SolutionError, concat, solution_from_trips

INF = float("inf")

#: two fitness values count as clones when they differ by less than this
#: relative tolerance (law objectives are real-valued; exact equality
#: would never fire).
CLONE_RTOL = 1e-6

#: hard cap on loop passes relative to mni; the productive-iteration and
#: no-improvement counters can both stall on tiny instances where every
#: child is a clone, and this guard guarantees termination.
PASS_GUARD_FACTOR = 10


class GaError(RuntimeError):
    """Degenerate instance or invalid GA state."""


@dataclass(frozen=True)
class GaParams:
    nc: int = 30            # population size
    pm: float = 0.1         # mutation (local search) rate
    mni: int = 20000        # max productive iterations
    mnui: int = 6000        # max productive iterations without a new best
    stop_ratio: float = 1.05  # stop at ratio * reference cost, when known
    seed: int = 1
    ls_max_iters: int = 20  # local search iteration cap

    def __post_init__(self):
        if self.nc < 3:
            raise GaError("population size must be at least 3")
        if not (0.0 <= self.pm <= 1.0):
            raise GaError("pm must be a probability")


@dataclass
class Chromosome:
    tour: np.ndarray        # int32 task arcs
    value: float            # fitness of the split solution
    bounds: list[int]       # trip end positions of the split

    def __lt__(self, other: "Chromosome") -> bool:
        return self.value < other.value


@dataclass
class Population:
    members: list[Chromosome]  # ascending fitness
    nc: int


@dataclass
class RunLog:
    rows: list[tuple[int, float, float]] = field(default_factory=list)
    total_time: float = 0.0
    time_to_best: float = 0.0
    iterations: int = 0
    loop_passes: int = 0
    stop_reason: str = ""

    def to_csv(self) -> str:
        lines = ["iteration,best_fitness,elapsed_seconds"]
        for it, best, elapsed in self.rows:
            lines.append(f"{it},{best!r},{elapsed!r}")
        lines.append(f"total_time,{self.total_time!r}")
        lines.append(f"time_to_best,{self.time_to_best!r}")
        return "\n".join(lines) + "\n"


def is_clone(candidate: float, existing: float) -> bool:
    """Fitness-level clone test: relative tolerance on the candidate value."""
    if math.isinf(candidate) or math.isinf(existing):
        return candidate == existing
    return abs(candidate - existing) <= CLONE_RTOL * max(1.0, abs(candidate))


class _Engine:
    """Precomputed kernel arguments for one (instance, objective) pair."""

    def __init__(self, ctx: ProblemContext, spec: ObjectiveSpec):
        self.ctx = ctx
        self.spec = spec
        self.cap_eff = spec.effective_capacity(ctx.instance.capacity)
        self.q_cap = ctx.instance.capacity
        self.codes = spec.kernel_codes()

    def split_value(self, tour: np.ndarray) -> tuple[float, list[int]]:
        c = self.ctx
        return _kernels.split_value(
            tour, c.task_tails, c.task_heads, c.task_cost, c.task_demand,
            c.dist.matrix, c.depot, self.cap_eff, self.q_cap,
            self.spec.k_noise, *self.codes)

    def local_search(self, tour: np.ndarray, bounds: list[int],
                     max_iters: int) -> tuple[list[int], list[int], int]:
        c = self.ctx
        return _kernels.local_search(
            tour, bounds, c.task_tails, c.task_heads, c.task_cost,
            c.task_demand, c.dist.matrix, c.depot, self.cap_eff, self.q_cap,
            self.spec.k_noise, *self.codes, max_iters)

    def solution_of(self, chromo: Chromosome) -> Solution:
        lists = []
        b = 0
        for e in chromo.bounds:
            lists.append([int(a) for a in chromo.tour[b:e]])
            b = e
        return solution_from_trips(lists, self.ctx)


# ---------------------------------------------------------------------------
# constructive heuristics
# ---------------------------------------------------------------------------

def path_scanning(ctx: ProblemContext, spec: ObjectiveSpec) -> Solution:
    """Greedy nearest-task constructive heuristic, best of five tie rules.

    Each run extends the current trip with the unserviced task nearest to
    the vehicle that still fits the residual capacity; nearest-ties break
    by one of the classic rules (far from depot, near to depot, max and
    min demand/cost ratio, far/near switched at half load).
    """
    best_sol = None
    best_value = INF
    for rule in range(5):
        trips = _path_scan_once(ctx, spec.effective_capacity(ctx.instance.capacity), rule)
        sol = solution_from_trips(trips, ctx)
        value = fitness(sol, spec, ctx).value
        # keep the first rule's plan even when every rule violates a
        # constraint (all fitness values infinite)
        if best_sol is None or value < best_value:
            best_value = value
            best_sol = sol
    return best_sol


def _path_scan_once(ctx: ProblemContext, cap_eff: float, rule: int) -> list[list[int]]:
    D = ctx.dist.matrix
    depot = ctx.depot
    tails, heads = ctx.task_tails, ctx.task_heads
    dem, cost = ctx.task_demand, ctx.task_cost
    unserved = list(range(ctx.task_count))
    trips: list[list[int]] = []
    while unserved:
        trip: list[int] = []
        load = 0.0
        cur = depot
        while True:
            cands = []
            for task in unserved:
                if load + dem[task] > cap_eff:
                    continue
                cands.append(2 * task)
                cands.append(2 * task + 1)
            if not cands:
                break
            dmin = min(float(D[cur, tails[a]]) for a in cands)
            near = [a for a in cands if float(D[cur, tails[a]]) == dmin]
            pick = near[0]
            for a in near[1:]:
                if _rule_prefers(a, pick, rule, load, cap_eff, D, depot,
                                 heads, dem, cost):
                    pick = a
            trip.append(pick)
            load += float(dem[pick >> 1])
            cur = int(heads[pick])
            unserved.remove(pick >> 1)
        if not trip:
            raise SolutionError("a task does not fit the effective capacity")
        trips.append(trip)
    return trips


def _rule_prefers(a: int, b: int, rule: int, load: float, cap_eff: float,
                  D, depot, heads, dem, cost) -> bool:
    if rule == 4:
        rule = 0 if load < cap_eff / 2.0 else 1
    if rule == 0:
        return float(D[heads[a], depot]) > float(D[heads[b], depot])
    if rule == 1:
        return float(D[heads[a], depot]) < float(D[heads[b], depot])
    ra = float(dem[a >> 1]) / float(cost[a >> 1])
    rb = float(dem[b >> 1]) / float(cost[b >> 1])
    return ra > rb if rule == 2 else ra < rb


def augment_merge(ctx: ProblemContext, spec: ObjectiveSpec) -> Solution:
    """Classic two-phase constructive heuristic.

    Starts from one out-and-back trip per task; absorbs single-task trips
    whose edge lies on another trip's shortest connecting paths (zero
    insertion cost), then repeatedly applies the merge with the largest
    positive saving among the four concatenation variants of a trip pair,
    under the effective capacity.
    """
    cap_eff = spec.effective_capacity(ctx.instance.capacity)
    trips: list[list[int]] = [[2 * task] for task in range(ctx.task_count)]

    def det_of(seq: list[int]) -> float:
        det, _load, _sq2, _p, _s = _kernels.seq_stats(
            seq, ctx.task_tails, ctx.task_heads, ctx.task_cost,
            ctx.task_demand, ctx.dist.matrix, ctx.depot,
            ctx.instance.capacity, 0.0)
        return det

    def load_of(seq: list[int]) -> float:
        return float(sum(ctx.task_demand[a >> 1] for a in seq))

    # augment: free absorptions of single-task trips
    changed = True
    while changed:
        changed = False
        for i in range(len(trips)):
            if changed:
                break
            for j in range(len(trips)):
                if i == j or len(trips[j]) != 1:
                    continue
                if load_of(trips[i]) + load_of(trips[j]) > cap_eff:
                    continue
                base = det_of(trips[i])
                task = trips[j][0] >> 1
                done = False
                for o in (0, 1):
                    arc = 2 * task + o
                    for pos in range(len(trips[i]) + 1):
                        cand = trips[i][:pos] + [arc] + trips[i][pos:]
                        # free absorption: the edge sits on a path the trip
                        # already deadheads over (service cost = traversal cost)
                        if det_of(cand) - base <= 1e-9:
                            trips[i] = cand
                            del trips[j]
                            changed = True
                            done = True
                            break
                    if done:
                        break
                if done:
                    break

    # merge: best positive saving first
    while True:
        best_saving = 1e-9
        best = None
        for i in range(len(trips)):
            for j in range(i + 1, len(trips)):
                if load_of(trips[i]) + load_of(trips[j]) > cap_eff:
                    continue
                di = det_of(trips[i])
                dj = det_of(trips[j])
                rev_i = [a ^ 1 for a in reversed(trips[i])]
                rev_j = [a ^ 1 for a in reversed(trips[j])]
                for combo in (trips[i] + trips[j], trips[i] + rev_j,
                              trips[j] + trips[i], trips[j] + rev_i):
                    saving = di + dj - det_of(combo)
                    if saving > best_saving:
                        best_saving = saving
                        best = (i, j, combo)
        if best is None:
            break
        i, j, combo = best
        trips[i] = combo
        del trips[j]
    return solution_from_trips(trips, ctx)


# ---------------------------------------------------------------------------
# genetic operators
# ---------------------------------------------------------------------------

def ox_crossover(p1: GiantTour, p2: GiantTour,
                 rng: np.random.Generator) -> tuple[GiantTour, GiantTour]:
    """Modified order crossover; both children, task-aware duplicate skip.

    Draws ranks p <= q, copies the block, completes each child circularly
    from the other parent starting after the block, skipping tasks already
    present in either orientation.
    """
    t = len(p1.sequence)
    r1 = int(rng.integers(1, t + 1))
    r2 = int(rng.integers(1, t + 1))
    lo, hi = min(r1, r2) - 1, max(r1, r2) - 1
    a1 = np.asarray(p1.sequence, dtype=np.int32)
    a2 = np.asarray(p2.sequence, dtype=np.int32)
    c1 = _kernels.ox_child(a1, a2, lo, hi, t)
    c2 = _kernels.ox_child(a2, a1, lo, hi, t)
    return GiantTour(tuple(c1)), GiantTour(tuple(c2))


def binary_tournament(population: Population,
                      rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Two independent tournaments; each returns the better of two draws."""
    members = population.members
    if len(members) < 2:
        raise GaError("tournament needs at least two members")
    return _tournament_once(members, rng), _tournament_once(members, rng)


def _tournament_once(members: list[Chromosome], rng: np.random.Generator) -> Chromosome:
    n = len(members)
    i = int(rng.integers(0, n))
    j = int(rng.integers(0, n))
    return members[i] if members[i].value <= members[j].value else members[j]


def replace(population: Population, child: Chromosome,
            rng: np.random.Generator, victim_index: int | None = None) -> bool:
    """Incremental replacement into the worse half; clone-free or rejected.

    Returns True when the child entered the population (productive
    iteration).  The best member is never the victim.
    """
    members = population.members
    n = len(members)
    half_start = (n + 1) // 2
    if victim_index is None:
        victim_index = int(rng.integers(half_start, n))
    if not (half_start <= victim_index < n):
        raise GaError(f"victim index {victim_index} not in worse half")
    for idx, member in enumerate(members):
        if idx == victim_index:
            continue
        if is_clone(child.value, member.value):
            return False
    del members[victim_index]
    insort(members, child)
    return True


# ---------------------------------------------------------------------------
# population and main loop
# ---------------------------------------------------------------------------

def init_population(ctx: ProblemContext, spec: ObjectiveSpec, params: GaParams,
                    rng: np.random.Generator) -> Population:
    """Clone-free initial population: two heuristic seeds plus random tours.

    Stops early after ``nc * 50`` random draws; fewer than 3 distinct
    fitness values is a degenerate instance and raises :class:`GaError`.
    """
    engine = _Engine(ctx, spec)
    members: list[Chromosome] = []

    def try_add(tour: np.ndarray) -> bool:
        value, bounds = engine.split_value(tour)
        for member in members:
            if is_clone(value, member.value):
                return False
        insort(members, Chromosome(tour=tour, value=value, bounds=bounds))
        return True

    for heuristic in (path_scanning, augment_merge):
        sol = heuristic(ctx, spec)
        tour = np.asarray(concat(sol).sequence, dtype=np.int32)
        try_add(tour)

    t = ctx.task_count
    attempts = 0
    while len(members) < params.nc and attempts < params.nc * 50:
        perm = rng.permutation(t)
        orient = rng.integers(0, 2, t)
        tour = (2 * perm + orient).astype(np.int32)
        try_add(tour)
        attempts += 1
    if len(members) < 3:
        raise GaError(
            f"degenerate instance: only {len(members)} distinct fitness values")
    return Population(members=members, nc=len(members))


def local_search(solution: Solution, spec: ObjectiveSpec,
                 ctx: ProblemContext, max_iters: int = 20) -> Solution:
    """First-improvement local search (see the kernel for the move catalogue)."""
    engine = _Engine(ctx, spec)
    flat = np.asarray(solution.task_arcs(), dtype=np.int32)
    bounds = []
    total = 0
    for trip in solution.trips:
        total += len(trip.tasks)
        bounds.append(total)
    new_flat, new_bounds, _moves = engine.local_search(flat, bounds,
                                                       max_iters)
    lists = []
    b = 0
    for e in new_bounds:
        lists.append(new_flat[b:e])
        b = e
    return solution_from_trips(lists, ctx)


def run_ga(ctx: ProblemContext, spec: ObjectiveSpec,
           params: GaParams) -> tuple[Solution, RunLog]:
    """Full optimization run; returns the best solution and its log.

    Stops on: ``mni`` productive iterations, ``mnui`` productive
    iterations without improving the best, or best fitness reaching
    ``stop_ratio`` times the instance's reference cost (when present).  A
    hard cap on total loop passes guards against stalls on degenerate
    instances where every child is a clone.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    engine = _Engine(ctx, spec)
    population = init_population(ctx, spec, params, rng)
    members = population.members
    best = members[0]
    log = RunLog()
    log.rows.append((0, best.value, time.perf_counter() - started))
    log.time_to_best = log.rows[-1][2]

    threshold = None
    if ctx.instance.reference_dcarp_cost is not None:
        threshold = params.stop_ratio * ctx.instance.reference_dcarp_cost

    t = ctx.task_count
    ni = 0
    nui = 0
    passes = 0
    pass_guard = PASS_GUARD_FACTOR * params.mni + 1000
    stop_reason = ""
    while True:
        if ni >= params.mni:
            stop_reason = "mni"
            break
        if nui >= params.mnui:
            stop_reason = "mnui"
            break
        if threshold is not None and best.value <= threshold:
            stop_reason = "reference"
            break
        if passes >= pass_guard:
            stop_reason = "pass-guard"
            break
        passes += 1

        parent_a = _tournament_once(members, rng)
        parent_b = _tournament_once(members, rng)
        r1 = int(rng.integers(1, t + 1))
        r2 = int(rng.integers(1, t + 1))
        lo, hi = min(r1, r2) - 1, max(r1, r2) - 1
        keep = int(rng.integers(0, 2))
        if keep == 0:
            child_list = _kernels.ox_child(parent_a.tour, parent_b.tour, lo, hi, t)
        else:
            child_list = _kernels.ox_child(parent_b.tour, parent_a.tour, lo, hi, t)
        child_tour = np.asarray(child_list, dtype=np.int32)
        value, bounds = engine.split_value(child_tour)

        n = len(members)
        victim = int(rng.integers((n + 1) // 2, n))
        coin = float(rng.random())
        if coin < params.pm:
            ls_flat, ls_bounds, _moves = engine.local_search(
                child_tour, bounds, params.ls_max_iters)
            mut_tour = np.asarray(ls_flat, dtype=np.int32)
            mut_value, mut_bounds = engine.split_value(mut_tour)
            clone = False
            for idx, member in enumerate(members):
                if idx != victim and is_clone(mut_value, member.value):
                    clone = True
                    break
            if not clone:
                child_tour, value, bounds = mut_tour, mut_value, mut_bounds

        child = Chromosome(tour=child_tour, value=value, bounds=bounds)
        if replace(population, child, rng, victim_index=victim):
            ni += 1
            if child.value < best.value:
                nui = 0
                best = child
                elapsed = time.perf_counter() - started
                log.rows.append((ni, best.value, elapsed))
                log.time_to_best = elapsed
            else:
                nui += 1

    log.total_time = time.perf_counter() - started
    log.iterations = ni
    log.loop_passes = passes
    log.stop_reason = stop_reason
    return engine.solution_of(best), log
