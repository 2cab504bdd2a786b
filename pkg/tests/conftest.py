"""Shared fixtures and independent test oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from scarp._kernels import available_backends
from scarp.graph import ProblemContext
from scarp.instance import Edge, Instance, parse_instance

# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

PATH_GRAPH = """NAME path4
NODES 4
DEPOT 1
CAPACITY 4
EDGES 3
1 2 1 1.5
2 3 1 2
3 4 1 1.2
"""


@pytest.fixture(scope="session")
def path_ctx() -> ProblemContext:
    """Path 1-2-3-4, unit costs: the hand-traceable detour geometry."""
    return ProblemContext.build(parse_instance(PATH_GRAPH))


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]


@pytest.fixture
def both_backends():
    return available_backends()


# ---------------------------------------------------------------------------
# random instance generation
# ---------------------------------------------------------------------------

def random_instance(rng: np.random.Generator, n_nodes: int = 6,
                    extra_edges: int = 4, capacity: float = 10.0,
                    integer_costs: bool = True,
                    non_required: int = 0) -> Instance:
    """Random connected instance: spanning tree plus extra edges."""
    nodes = rng.permutation(n_nodes) + 1
    edges: list[Edge] = []
    seen = set()

    def cost():
        return float(rng.integers(1, 11)) if integer_costs \
            else float(rng.uniform(0.5, 10.0))

    for i in range(1, n_nodes):
        u = int(nodes[i])
        v = int(nodes[rng.integers(0, i)])
        seen.add((min(u, v), max(u, v)))
        edges.append(Edge(u, v, cost(), float(rng.integers(1, int(capacity) + 1))))
    for _ in range(extra_edges):
        u = int(rng.integers(1, n_nodes + 1))
        v = int(rng.integers(1, n_nodes + 1))
        if u == v or (min(u, v), max(u, v)) in seen:
            continue
        seen.add((min(u, v), max(u, v)))
        edges.append(Edge(u, v, cost(), float(rng.integers(1, int(capacity) + 1))))
    for k in range(min(non_required, len(edges) - 1)):
        e = edges[k]
        edges[k] = Edge(e.u, e.v, e.cost, 0.0)
    return Instance(name="random", node_count=n_nodes, depot=1,
                    capacity=capacity, edges=tuple(edges))


def random_tour(rng: np.random.Generator, t: int) -> np.ndarray:
    perm = rng.permutation(t)
    orient = rng.integers(0, 2, t)
    return (2 * perm + orient).astype(np.int32)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def exhaustive_distance(instance: Instance, src: int, dst: int) -> float:
    """Minimum cost over all simple paths (exponential; tiny graphs only)."""
    adj: dict[int, list[tuple[int, float]]] = {}
    for e in instance.edges:
        adj.setdefault(e.u, []).append((e.v, e.cost))
        adj.setdefault(e.v, []).append((e.u, e.cost))
    best = math.inf

    def walk(node: int, cost: float, seen: frozenset[int]):
        nonlocal best
        if cost >= best:
            return
        if node == dst:
            best = cost
            return
        for nxt, c in adj.get(node, []):
            if nxt not in seen:
                walk(nxt, cost + c, seen | {nxt})

    walk(src, 0.0, frozenset([src]))
    return best


def oracle_segment_weight(seg: list[int], ctx: ProblemContext, q_cap: float,
                          k_noise: float, base_code: int, term_code: int,
                          kw: float) -> tuple[float, float]:
    """(weight, load) of one trip, computed straight from the definitions.

    Uses scipy's normal CDF, an implementation independent of the kernels'
    erfc-based one.
    """
    from scipy.stats import norm

    D = ctx.dist.matrix
    depot = ctx.depot
    det = D[depot, ctx.task_tails[seg[0]]] + D[ctx.task_heads[seg[-1]], depot]
    for a in seg:
        det += ctx.task_cost[a >> 1]
    for a, b in zip(seg, seg[1:]):
        det += D[ctx.task_heads[a], ctx.task_tails[b]]
    load = sum(float(ctx.task_demand[a >> 1]) for a in seg)
    sq2 = sum(float(ctx.task_demand[a >> 1]) ** 2 for a in seg)
    if k_noise == 0.0:
        p = 0.0 if load < q_cap else (0.5 if load == q_cap else 1.0)
    else:
        p = 1.0 - float(norm.cdf((q_cap - load) / (k_noise * math.sqrt(sq2))))
    if len(seg) >= 2:
        a, b = ctx.task_heads[seg[-2]], ctx.task_tails[seg[-1]]
        s = float(D[a, depot] + D[depot, b] - D[a, b])
    else:
        s = 0.0
    w = float(det)
    if base_code == 1:
        w += s * p
    if term_code == 1:
        w += kw * s * math.sqrt(max(p - p * p, 0.0))
    elif term_code == 2:
        w += kw * (1.0 + p)
    elif term_code == 3:
        w += kw * math.sqrt(max(p - p * p, 0.0))
    return w, load


def brute_force_split(tour: list[int], ctx: ProblemContext, cap_eff: float,
                      q_cap: float, k_noise: float, base_code: int,
                      term_code: int, kw: float):
    """Enumerate all 2^(t-1) consecutive segmentations; exact minimum.

    Returns (best_weight, best_bounds) where ties prefer fewer trips and
    then the lexicographically earliest cut positions.
    """
    t = len(tour)
    best_w = math.inf
    best_key = None
    best_bounds = None
    for mask in range(1 << (t - 1)):
        bounds = [i + 1 for i in range(t - 1) if (mask >> i) & 1] + [t]
        total = 0.0
        feasible = True
        start = 0
        for e in bounds:
            w, load = oracle_segment_weight(
                list(tour[start:e]), ctx, q_cap, k_noise, base_code,
                term_code, kw)
            if load > cap_eff:
                feasible = False
                break
            total += w
            start = e
        if not feasible:
            continue
        key = (total, len(bounds), bounds)
        if best_key is None or key < best_key:
            best_key = key
            best_w = total
            best_bounds = bounds
    return best_w, best_bounds


def pb_tail_enumeration(ps: list[float], m: int) -> float:
    """P{#successes > m} by enumerating all 2^t outcomes (vectorised)."""
    t = len(ps)
    ps_arr = np.asarray(ps, dtype=np.float64)
    masks = np.arange(1 << t, dtype=np.int64)[:, None]
    bits = (masks >> np.arange(t)) & 1
    probs = np.where(bits == 1, ps_arr, 1.0 - ps_arr).prod(axis=1)
    counts = bits.sum(axis=1)
    return float(probs[counts > m].sum())


def build_h1h2_case(rng: np.random.Generator):
    """Instance + solution + 2-point demand laws where the closed-form
    hypotheses hold exactly: a failure can only happen at the last task of
    a trip, and at most once per trip.

    Prefix tasks take values in {1, 2}; the last task of each trip is sized
    so the worst prefix never exceeds capacity but the full trip can.
    Returns (ctx, solution, laws, exact_p) with ``laws`` mapping task index
    to ((value, prob), ...) and ``exact_p`` the per-trip failure
    probabilities computed by enumeration.
    """
    from itertools import product

    from scarp.solution import solution_from_trips

    capacity = 10.0
    n_trips = int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, 5)) for _ in range(n_trips)]
    total = sum(sizes)
    laws: dict[int, tuple[tuple[float, float], ...]] = {}
    task = 0
    for L in sizes:
        for i in range(L):
            w = float(rng.uniform(0.2, 0.8))
            if i < L - 1:
                lo, hi = 1.0, 2.0
            elif L == 1:
                lo, hi = 1.0, float(rng.integers(2, int(capacity) + 1))
            else:
                slack = 2 * (L - 1)
                hi = capacity - slack + float(rng.integers(1, slack + 1))
                lo = 1.0
            laws[task] = ((lo, 1.0 - w), (hi, w))
            task += 1
    edges = []
    for j in range(total):
        mean = sum(v * p for v, p in laws[j])
        edges.append(Edge(j + 1, j + 2, float(rng.integers(1, 6)), mean))
    instance = Instance(name="h1h2", node_count=total + 1, depot=1,
                        capacity=capacity, edges=tuple(edges))
    ctx = ProblemContext.build(instance)
    lists = []
    task = 0
    for L in sizes:
        lists.append([int(2 * (task + i) + rng.integers(0, 2)) for i in range(L)])
        task += L
    solution = solution_from_trips(lists, ctx)
    exact_p = []
    for trip in solution.trips:
        p_fail = 0.0
        supports = [laws[a >> 1] for a in trip.tasks]
        for combo in product(*supports):
            value = sum(v for v, _p in combo)
            prob = 1.0
            for _v, p in combo:
                prob *= p
            if value > capacity:
                p_fail += prob
        exact_p.append(p_fail)
    return ctx, solution, laws, exact_p


def normal_cdf_quadrature(xs: np.ndarray) -> np.ndarray:
    """Composite Simpson cumulative integral of the N(0,1) density.

    Starts from the left edge of ``xs``; the tail below it is treated as 0,
    valid when xs[0] <= -8 (true tail < 1e-15).
    """
    xs = np.asarray(xs, dtype=np.float64)
    mids = (xs[:-1] + xs[1:]) / 2.0

    def pdf(v):
        return np.exp(-v * v / 2.0) / math.sqrt(2.0 * math.pi)

    steps = (xs[1:] - xs[:-1]) / 6.0 * (pdf(xs[:-1]) + 4.0 * pdf(mids) + pdf(xs[1:]))
    out = np.empty_like(xs)
    out[0] = 0.0
    np.cumsum(steps, out=out[1:])
    return out
