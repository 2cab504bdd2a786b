"""Generate deterministic stand-in benchmark instances.

The classic arc-routing benchmark files are not redistributable from this
repository, so for every instance of the well-known 23-file set this
script emits a stand-in with the same structural profile: node count,
edge count, capacity, fleet size and demand style.  Edge lists and costs
are synthetic (seeded, reproducible); results on these files are NOT
comparable with published tables.  Drop authentic files over these (same
names, converted with `scarp convert`) to reproduce literature numbers.

Each file's REFERENCE line is calibrated by the bundled solver (best of
three long runs) so that ratio-based stopping behaves sensibly.

Usage: python data/make_standins.py [--skip-calibration]
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from scarp.ga import GaParams, run_ga
from scarp.graph import ProblemContext
from scarp.instance import Edge, Instance, serialize_instance, validate

# (name, nodes, edges, capacity, vehicles, unit_demands); the profile of
# the classic set.  gdb14..gdb18 are complete graphs.  Unit-demand profiles
# are scaled by 10 (capacity 50, demands near 10): a demand mean sitting on
# the sampling truncation floor makes trip failures deterministic instead
# of Gaussian, which is a degenerate regime the stochastic model is not
# meant for.
PROFILES = [
    ("gdb2", 12, 26, 50, 6, True),
    ("gdb3", 12, 22, 50, 5, True),
    ("gdb4", 11, 19, 50, 4, True),
    ("gdb5", 13, 26, 50, 6, True),
    ("gdb6", 12, 22, 50, 5, True),
    ("gdb7", 12, 22, 50, 5, True),
    ("gdb8", 27, 46, 27, 10, False),
    ("gdb9", 27, 51, 27, 10, False),
    ("gdb10", 12, 25, 100, 4, False),
    ("gdb11", 22, 45, 50, 5, False),
    ("gdb12", 13, 23, 35, 7, False),
    ("gdb13", 10, 28, 41, 6, False),
    ("gdb14", 7, 21, 21, 5, False),
    ("gdb15", 7, 21, 37, 4, False),
    ("gdb16", 8, 28, 24, 5, False),
    ("gdb17", 8, 28, 41, 5, False),
    ("gdb18", 9, 36, 37, 5, False),
    ("gdb19", 8, 11, 27, 3, False),
    ("gdb20", 11, 22, 27, 4, False),
    ("gdb21", 11, 33, 27, 6, False),
    ("gdb22", 11, 44, 27, 8, False),
    ("gdb23", 11, 55, 27, 10, False),
]


def build_graph(rng: np.random.Generator, n: int, m: int) -> list[tuple[int, int]]:
    max_edges = n * (n - 1) // 2
    if m > max_edges:
        raise ValueError(f"{m} edges impossible on {n} nodes")
    pairs: list[tuple[int, int]] = []
    seen = set()
    order = rng.permutation(n) + 1
    for i in range(1, n):
        u = int(order[i])
        v = int(order[rng.integers(0, i)])
        key = (min(u, v), max(u, v))
        seen.add(key)
        pairs.append(key)
    while len(pairs) < m:
        u = int(rng.integers(1, n + 1))
        v = int(rng.integers(1, n + 1))
        key = (min(u, v), max(u, v))
        if u == v or key in seen:
            continue
        seen.add(key)
        pairs.append(key)
    pairs.sort()
    return pairs


def assign_demands(rng: np.random.Generator, m: int, capacity: int,
                   vehicles: int, unit: bool) -> list[int]:
    # land the total in the bin that needs exactly `vehicles` vehicles,
    # drawing from a band around the implied average; demands stay >= 2 so
    # the sampling truncation floor sits well below every mean
    target = capacity * (vehicles - 1) + max(1, int(round(0.7 * capacity)))
    target = min(target, capacity * vehicles)
    avg = target / m
    lo = max(2, int(avg * 0.5))
    hi = min(capacity, max(lo + 1, int(avg * 1.5) + 1))
    demands = [int(rng.integers(lo, hi + 1)) for _ in range(m)]
    guard = 0
    while sum(demands) != target and guard < 10_000:
        idx = int(rng.integers(0, m))
        if sum(demands) < target and demands[idx] < hi:
            demands[idx] += 1
        elif sum(demands) > target and demands[idx] > lo:
            demands[idx] -= 1
        guard += 1
    return demands


def make_instance(name: str, n: int, m: int, capacity: int, vehicles: int,
                  unit: bool, seed: int) -> Instance:
    digest = hashlib.sha256(f"standin:{name}:{seed}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    if m == n * (n - 1) // 2:
        pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    else:
        pairs = build_graph(rng, n, m)
    costs = [int(rng.integers(1, 21)) for _ in pairs]
    demands = assign_demands(rng, m, capacity, vehicles, unit)
    edges = tuple(Edge(u, v, float(c), float(d))
                  for (u, v), c, d in zip(pairs, costs, demands))
    instance = Instance(name=name, node_count=n, depot=1,
                        capacity=float(capacity), edges=edges)
    problems = validate(instance)
    if problems:
        raise RuntimeError(f"{name}: {problems}")
    return instance


def calibrate_reference(instance: Instance) -> float:
    ctx = ProblemContext.build(instance)
    from scarp.objectives import parse_objective
    spec = parse_objective("tight")
    best = None
    for seed in (1, 2, 3):
        sol, _log = run_ga(ctx, spec, GaParams(seed=seed))
        if best is None or sol.det_cost < best:
            best = sol.det_cost
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--skip-calibration", action="store_true")
    parser.add_argument("--out-dir", default=str(Path(__file__).parent / "gdb"))
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, n, m, capacity, vehicles, unit in PROFILES:
        instance = make_instance(name, n, m, capacity, vehicles, unit, seed=20240)
        if not args.skip_calibration:
            reference = calibrate_reference(instance)
            instance = Instance(
                name=instance.name, node_count=instance.node_count,
                depot=instance.depot, capacity=instance.capacity,
                edges=instance.edges, reference_dcarp_cost=reference)
        text = ("# synthetic stand-in with the structural profile of the classic\n"
                "# benchmark instance of the same name; costs and topology are NOT\n"
                "# the published data.  Generated by data/make_standins.py.\n"
                + serialize_instance(instance))
        path = out_dir / f"{name}.txt"
        path.write_text(text, encoding="utf-8")
        print(f"{name}: n={n} m={m} Q={capacity} "
              f"ref={instance.reference_dcarp_cost}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
