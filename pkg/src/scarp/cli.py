"""Experiment runner: optimize, replicate, report.

``scarp solve`` runs the two-phase pipeline on one instance (the
replication phase can be cancelled), ``scarp suite`` runs a manifest of
configurations and aggregates per-approach averages, ``scarp convert``
turns classic benchmark ``.dat`` files into the canonical format.

Human-readable tables round to 2 decimals; the machine CSV keeps full
precision and round-trips exactly.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from .ga import GaParams, run_ga
from .graph import ProblemContext
from .instance import Instance, load_instance, import_classic, serialize_instance
from .objectives import ObjectiveSpec, fitness, parse_objective
from .simulator import replicate
from .solution import serialize_solution


@dataclass(frozen=True)
class RunConfig:
    instance_path: str
    approach: str                 # objective string form, e.g. "law-meanstd:10"
    k_noise: float = 0.1
    n_replications: int = 1000
    seed: int = 1
    nc: int = 30
    pm: float = 0.1
    mni: int = 20000
    mnui: int = 6000
    stop_ratio: float = 1.05
    no_replication: bool = False
    label: str = ""               # grouping key for suite aggregates
    baseline: bool = False        # designated comparison baseline
    solution_out: str = ""
    log_out: str = ""

    def objective(self) -> ObjectiveSpec:
        return parse_objective(self.approach, k_noise=self.k_noise)

    def ga_params(self) -> GaParams:
        return GaParams(nc=self.nc, pm=self.pm, mni=self.mni, mnui=self.mnui,
                        stop_ratio=self.stop_ratio, seed=self.seed)


_EMPIRICAL_FIELDS = ("emp_mean_cost", "emp_mean_trips", "emp_extra_trip_rate",
                     "emp_std_cost", "emp_std_trips", "emp_variability")


@dataclass
class ResultRow:
    instance: str
    approach: str
    seed: int
    det_cost: float
    trip_count: int
    mean_cost: float          # closed-form expectation
    std_cost: float
    mean_trips: float
    std_trips: float
    prob_extra: float
    emp_mean_cost: float | None = None
    emp_mean_trips: float | None = None
    emp_extra_trip_rate: float | None = None
    emp_std_cost: float | None = None
    emp_std_trips: float | None = None
    emp_variability: float | None = None
    total_time_s: float = 0.0
    time_to_best_s: float = 0.0
    label: str = ""
    baseline: bool = False

    @staticmethod
    def csv_header() -> list[str]:
        return [f.name for f in fields(ResultRow)]

    def csv_values(self) -> list[str]:
        out = []
        for f in fields(ResultRow):
            value = getattr(self, f.name)
            if value is None:
                out.append("")
            elif isinstance(value, float):
                out.append(repr(value))
            else:
                out.append(str(value))
        return out

    @staticmethod
    def from_csv(record: dict[str, str]) -> "ResultRow":
        kwargs = {}
        for f in fields(ResultRow):
            raw = record[f.name]
            if raw == "" and f.name in _EMPIRICAL_FIELDS:
                kwargs[f.name] = None
            elif f.name in ("instance", "approach", "label"):
                kwargs[f.name] = raw
            elif f.name == "baseline":
                kwargs[f.name] = raw == "True"
            elif f.name in ("seed", "trip_count"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = float(raw)
        return ResultRow(**kwargs)


def run_experiment(config: RunConfig) -> ResultRow:
    """Optimize, then (unless cancelled) replicate the best solution."""
    instance = load_instance(config.instance_path)
    ctx = ProblemContext.build(instance)
    spec = config.objective()
    best, log = run_ga(ctx, spec, config.ga_params())
    fit = fitness(best, spec, ctx)
    comp = fit.components
    row = ResultRow(
        instance=instance.name,
        approach=config.approach,
        seed=config.seed,
        det_cost=comp["h"],
        trip_count=best.trip_count,
        mean_cost=comp["mean_H"],
        std_cost=comp["sigma_H"],
        mean_trips=comp["mean_T"],
        std_trips=comp["sigma_T"],
        prob_extra=comp["prob_extra"],
        total_time_s=log.total_time,
        time_to_best_s=log.time_to_best,
        label=config.label or config.approach,
        baseline=config.baseline,
    )
    if not config.no_replication:
        stats = replicate(best, instance, config.k_noise,
                          config.n_replications, config.seed, ctx=ctx)
        row.emp_mean_cost = stats.mean_cost
        row.emp_mean_trips = stats.mean_trips
        row.emp_extra_trip_rate = stats.extra_trip_rate
        row.emp_std_cost = stats.std_cost
        row.emp_std_trips = stats.std_trips
        row.emp_variability = stats.variability
    if config.solution_out:
        Path(config.solution_out).write_text(
            serialize_solution(best, ctx), encoding="utf-8")
    if config.log_out:
        Path(config.log_out).write_text(log.to_csv(), encoding="utf-8")
    return row


def write_rows(rows: list[ResultRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ResultRow.csv_header())
        for row in rows:
            writer.writerow(row.csv_values())


def read_rows(path: str | Path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [ResultRow.from_csv(rec) for rec in csv.DictReader(fh)]


def _fmt2(value, percent=False) -> str:
    if value is None:
        return "-"
    return f"{value * 100:.2f}%" if percent else f"{value:.2f}"


def format_table(rows: list[ResultRow]) -> str:
    header = (f"{'instance':<12} {'approach':<22} {'h(S)':>9} {'t(S)':>5} "
              f"{'meanH':>10} {'sigH':>8} {'meanT':>7} {'sigT':>6} "
              f"{'p_extra':>8} {'emp_meanH':>10} {'emp_p':>8} {'emp_sigH':>9} "
              f"{'variab':>8} {'time_s':>8}")
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.instance:<12} {r.approach:<22} {r.det_cost:>9.2f} "
            f"{r.trip_count:>5} {r.mean_cost:>10.2f} {r.std_cost:>8.2f} "
            f"{r.mean_trips:>7.2f} {r.std_trips:>6.2f} "
            f"{_fmt2(r.prob_extra, percent=True):>8} "
            f"{_fmt2(r.emp_mean_cost):>10} "
            f"{_fmt2(r.emp_extra_trip_rate, percent=True):>8} "
            f"{_fmt2(r.emp_std_cost):>9} "
            f"{_fmt2(r.emp_variability, percent=True):>8} "
            f"{r.total_time_s:>8.2f}")
    return "\n".join(lines)


def aggregate_rows(rows: list[ResultRow]) -> list[dict]:
    """Per-label averages plus gap ratios against the designated baseline."""
    by_label: dict[str, list[ResultRow]] = {}
    order: list[str] = []
    for row in rows:
        if row.label not in by_label:
            by_label[row.label] = []
            order.append(row.label)
        by_label[row.label].append(row)
    baseline_by_instance: dict[str, ResultRow] = {}
    for row in rows:
        if row.baseline:
            baseline_by_instance[row.instance] = row

    def mean(values):
        values = [v for v in values if v is not None]
        return sum(values) / len(values) if values else None

    out = []
    for label in order:
        group = by_label[label]
        entry: dict = {
            "label": label,
            "runs": len(group),
            "avg_det_cost": mean([r.det_cost for r in group]),
            "avg_emp_gap": mean([
                (r.emp_mean_cost - r.det_cost) / r.det_cost
                for r in group if r.emp_mean_cost is not None]),
            "avg_extra_trip_rate": mean([r.emp_extra_trip_rate for r in group]),
            "avg_emp_std_cost": mean([r.emp_std_cost for r in group]),
            "avg_emp_std_trips": mean([r.emp_std_trips for r in group]),
            "avg_variability": mean([r.emp_variability for r in group]),
        }
        if baseline_by_instance:
            det_ratios = []
            mean_ratios = []
            for r in group:
                base = baseline_by_instance.get(r.instance)
                if base is None or base.label == label:
                    continue
                det_ratios.append((r.det_cost - base.det_cost) / base.det_cost)
                if r.emp_mean_cost is not None and base.emp_mean_cost is not None:
                    mean_ratios.append(
                        (r.emp_mean_cost - base.emp_mean_cost) / base.emp_mean_cost)
            entry["avg_det_gap_vs_baseline"] = mean(det_ratios)
            entry["avg_emp_mean_gap_vs_baseline"] = mean(mean_ratios)
        out.append(entry)
    return out


def format_summary(aggregates: list[dict]) -> str:
    lines = ["", "per-approach averages:"]
    for entry in aggregates:
        parts = [f"  {entry['label']:<24} runs={entry['runs']}"]
        for key in ("avg_det_cost", "avg_emp_gap", "avg_extra_trip_rate",
                    "avg_emp_std_cost", "avg_emp_std_trips", "avg_variability",
                    "avg_det_gap_vs_baseline", "avg_emp_mean_gap_vs_baseline"):
            if key in entry and entry[key] is not None:
                percent = key in ("avg_emp_gap", "avg_extra_trip_rate",
                                  "avg_variability", "avg_det_gap_vs_baseline",
                                  "avg_emp_mean_gap_vs_baseline")
                parts.append(f"{key[4:]}={_fmt2(entry[key], percent=percent)}")
        lines.append(" ".join(parts))
    return "\n".join(lines)


def parse_manifest(path: str | Path) -> list[RunConfig]:
    """One RunConfig per non-comment line, as ``key=value`` tokens.

    ``instance`` and ``approach`` are required; remaining keys mirror the
    ``solve`` flags (``k_noise``, ``replications``, ``seed``, ``nc``, ``pm``,
    ``mni``, ``mnui``, ``stop_ratio``, ``no_replication``, ``label``,
    ``baseline``, ``solution_out``, ``log_out``).
    """
    configs = []
    base = Path(path).parent
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kv: dict[str, str] = {}
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ValueError(f"manifest line {line_no}: expected key=value, got {token!r}")
            kv[key] = value
        if "instance" not in kv or "approach" not in kv:
            raise ValueError(f"manifest line {line_no}: needs instance= and approach=")
        inst_path = Path(kv["instance"])
        if not inst_path.is_absolute():
            inst_path = base / inst_path
        configs.append(RunConfig(
            instance_path=str(inst_path),
            approach=kv["approach"],
            k_noise=float(kv.get("k_noise", 0.1)),
            n_replications=int(kv.get("replications", 1000)),
            seed=int(kv.get("seed", 1)),
            nc=int(kv.get("nc", 30)),
            pm=float(kv.get("pm", 0.1)),
            mni=int(kv.get("mni", 20000)),
            mnui=int(kv.get("mnui", 6000)),
            stop_ratio=float(kv.get("stop_ratio", 1.05)),
            no_replication=kv.get("no_replication", "0") in ("1", "true", "yes"),
            label=kv.get("label", ""),
            baseline=kv.get("baseline", "0") in ("1", "true", "yes"),
            solution_out=kv.get("solution_out", ""),
            log_out=kv.get("log_out", ""),
        ))
    return configs


def run_suite(configs: list[RunConfig], workers: int = 1) -> list[ResultRow]:
    """Run every config; rows come back in config order."""
    if workers <= 1:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, configs))


def _add_solve_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--instance", required=True)
    sub.add_argument("--approach", required=True,
                     help="objective, e.g. tight | slack:0.9 | law-mean | "
                          "law-meanstd:10 | obj2:eps=0.05,m=0,base=meanH")
    sub.add_argument("--k-noise", type=float, default=0.1)
    sub.add_argument("--replications", type=int, default=1000)
    sub.add_argument("--seed", type=int, default=1)
    sub.add_argument("--nc", type=int, default=30)
    sub.add_argument("--pm", type=float, default=0.1)
    sub.add_argument("--mni", type=int, default=20000)
    sub.add_argument("--mnui", type=int, default=6000)
    sub.add_argument("--stop-ratio", type=float, default=1.05)
    sub.add_argument("--no-replication", action="store_true")
    sub.add_argument("--out", default="", help="machine CSV output path")
    sub.add_argument("--solution-out", default="")
    sub.add_argument("--log-out", default="", help="GA run log CSV")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="scarp",
        description="stochastic arc routing solver and replication harness")
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="optimize one instance, then replicate")
    _add_solve_args(solve)

    suite = subs.add_parser("suite", help="run a manifest of configurations")
    suite.add_argument("--manifest", required=True)
    suite.add_argument("--out", default="", help="machine CSV output path")
    suite.add_argument("--workers", type=int, default=1)

    convert = subs.add_parser("convert", help="classic .dat to canonical text")
    convert.add_argument("--classic", required=True)
    convert.add_argument("--out", required=True)
    convert.add_argument("--reference", type=float, default=None,
                         help="attach a best-known cost to the output")

    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            config = RunConfig(
                instance_path=args.instance, approach=args.approach,
                k_noise=args.k_noise, n_replications=args.replications,
                seed=args.seed, nc=args.nc, pm=args.pm, mni=args.mni,
                mnui=args.mnui, stop_ratio=args.stop_ratio,
                no_replication=args.no_replication,
                solution_out=args.solution_out, log_out=args.log_out)
            row = run_experiment(config)
            print(format_table([row]))
            if args.out:
                write_rows([row], args.out)
        elif args.command == "suite":
            configs = parse_manifest(args.manifest)
            rows = run_suite(configs, workers=args.workers)
            print(format_table(rows))
            print(format_summary(aggregate_rows(rows)))
            if args.out:
                write_rows(rows, args.out)
        else:
            instance = import_classic(Path(args.classic).read_text(encoding="utf-8"))
            if args.reference is not None:
                instance = Instance(
                    name=instance.name, node_count=instance.node_count,
                    depot=instance.depot, capacity=instance.capacity,
                    edges=instance.edges, reference_dcarp_cost=args.reference)
            Path(args.out).write_text(serialize_instance(instance), encoding="utf-8")
            print(f"wrote {args.out} ({instance.task_count} tasks)")
    except Exception as exc:  # surface module errors with context, exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
