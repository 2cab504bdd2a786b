"""Fitness catalogue: deterministic, slack-capacity and law-based objectives.

Kinds and their canonical CLI string forms:

* ``tight``                          minimize deterministic cost at capacity Q
* ``slack:K``                        deterministic cost at capacity K*Q (0<K<1)
* ``law-mean``                       minimize mean recourse cost
* ``law-meanstd:K``                  mean cost + K * cost std
* ``obj2:eps=E,m=M,base=B``          base, infinite when P{more than M extra trips} > E
* ``obj3:k=K,term=T,base=B``         base + K * term, term in sigmaH|meanT|sigmaT
* ``obj4:eps=E,term=T,base=B``       base, infinite when term > E (sigmaH|sigmaT)
* ``obj5:eps=E,base=B``              base, infinite when any trip failure prob > E

``base`` is ``meanH`` (mean recourse cost) or ``h`` (deterministic cost).
Split surrogate weights follow the unconstrained parent of each kind; the
reported fitness is always recomputed exactly on the resulting trips.
Robustness terms are always evaluated against the full capacity Q, even
under slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import _kernels
from .graph import ProblemContext
from .solution import Solution

INF = float("inf")

_TERMS = {"sigmaH": 1, "meanT": 2, "sigmaT": 3}


class ObjectiveError(ValueError):
    """Unknown or ill-parameterised objective."""


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str                      # tight | slack | law-mean | law-meanstd | obj2..obj5
    k_noise: float = 0.1
    k_slack: float | None = None   # slack capacity fraction, in (0, 1)
    k_weight: float = 0.0          # weight of the robustness term
    eps: float | None = None       # constraint threshold
    m_extra: int = 0               # allowed extra trips (obj2)
    base: str = "meanH"            # meanH | h
    term: str | None = None        # sigmaH | meanT | sigmaT

    def __post_init__(self):
        if self.kind not in ("tight", "slack", "law-mean", "law-meanstd",
                             "obj2", "obj3", "obj4", "obj5"):
            raise ObjectiveError(f"unknown objective kind {self.kind!r}")
        if self.k_noise < 0:
            raise ObjectiveError("k_noise must be nonnegative")
        if self.kind == "slack" and not (self.k_slack and 0 < self.k_slack < 1):
            raise ObjectiveError("slack requires 0 < k_slack < 1")
        if self.kind in ("obj2", "obj4", "obj5"):
            if self.eps is None or self.eps <= 0:
                raise ObjectiveError(f"{self.kind} requires eps > 0")
        if self.kind in ("obj3", "law-meanstd") and self.k_weight < 0:
            raise ObjectiveError("term weight must be nonnegative")
        if self.kind == "obj2" and self.m_extra < 0:
            raise ObjectiveError("m must be nonnegative")
        if self.base not in ("meanH", "h"):
            raise ObjectiveError(f"base must be meanH or h, got {self.base!r}")
        if self.kind == "obj3" and self.term not in _TERMS:
            raise ObjectiveError("obj3 requires term in sigmaH|meanT|sigmaT")
        if self.kind == "obj4" and self.term not in ("sigmaH", "sigmaT"):
            raise ObjectiveError("obj4 requires term in sigmaH|sigmaT")

    def effective_capacity(self, capacity: float) -> float:
        """Capacity the trips are packed against: k_slack*Q under slack, else Q."""
        if self.kind == "slack":
            return self.k_slack * capacity
        return capacity

    def split_codes(self) -> tuple[int, int, float]:
        """(base_code, term_code, k_weight) driving the split surrogate weights."""
        if self.kind in ("tight", "slack"):
            return 0, 0, 0.0
        if self.kind == "law-mean":
            return 1, 0, 0.0
        if self.kind == "law-meanstd":
            return 1, 1, self.k_weight
        base_code = 1 if self.base == "meanH" else 0
        if self.kind == "obj3":
            return base_code, _TERMS[self.term], self.k_weight
        return base_code, 0, 0.0

    def constraint_codes(self) -> tuple[int, float, int]:
        """(cons_code, eps, m_extra) for the exact fitness evaluation."""
        if self.kind == "obj2":
            return 1, self.eps, self.m_extra
        if self.kind == "obj4":
            return (2 if self.term == "sigmaH" else 3), self.eps, 0
        if self.kind == "obj5":
            return 4, self.eps, 0
        return 0, 0.0, 0

    def kernel_codes(self) -> tuple[int, int, float, int, float, int]:
        base_code, term_code, kw = self.split_codes()
        cons_code, eps, m_extra = self.constraint_codes()
        return base_code, term_code, kw, cons_code, eps, m_extra

    def canonical(self) -> str:
        if self.kind == "tight":
            return "tight"
        if self.kind == "slack":
            return f"slack:{_fmt(self.k_slack)}"
        if self.kind == "law-mean":
            return "law-mean"
        if self.kind == "law-meanstd":
            return f"law-meanstd:{_fmt(self.k_weight)}"
        if self.kind == "obj2":
            return f"obj2:eps={_fmt(self.eps)},m={self.m_extra},base={self.base}"
        if self.kind == "obj3":
            return f"obj3:k={_fmt(self.k_weight)},term={self.term},base={self.base}"
        if self.kind == "obj4":
            return f"obj4:eps={_fmt(self.eps)},term={self.term},base={self.base}"
        return f"obj5:eps={_fmt(self.eps)},base={self.base}"


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def parse_objective(text: str, k_noise: float = 0.1) -> ObjectiveSpec:
    """Parse the canonical string form, e.g. ``law-meanstd:10``."""
    head, _, args = text.strip().partition(":")
    head = head.lower()
    try:
        if head == "tight":
            return ObjectiveSpec(kind="tight", k_noise=k_noise)
        if head == "slack":
            return ObjectiveSpec(kind="slack", k_noise=k_noise, k_slack=float(args))
        if head == "law-mean":
            return ObjectiveSpec(kind="law-mean", k_noise=k_noise)
        if head == "law-meanstd":
            return ObjectiveSpec(kind="law-meanstd", k_noise=k_noise,
                                 k_weight=float(args))
        if head in ("obj2", "obj3", "obj4", "obj5"):
            kv: dict[str, str] = {}
            for part in args.split(","):
                if part:
                    key, _, value = part.partition("=")
                    kv[key.strip()] = value.strip()
            return ObjectiveSpec(
                kind=head,
                k_noise=k_noise,
                k_weight=float(kv.get("k", 0.0)),
                eps=float(kv["eps"]) if "eps" in kv else None,
                m_extra=int(kv.get("m", 0)),
                base=kv.get("base", "meanH"),
                term=kv.get("term"),
            )
    except (KeyError, ValueError) as exc:
        raise ObjectiveError(f"cannot parse objective {text!r}: {exc}") from exc
    raise ObjectiveError(f"cannot parse objective {text!r}")


@dataclass(frozen=True)
class Fitness:
    value: float  # finite, or +inf when a constraint is violated
    components: dict = field(default_factory=dict, compare=False)


def fitness(solution: Solution, spec: ObjectiveSpec, ctx: ProblemContext) -> Fitness:
    """Exact extended-real fitness of a solution under ``spec``.

    Raises :class:`ObjectiveError` when a trip exceeds the effective
    capacity (the solution is not a member of the search space at all).
    """
    cap_eff = spec.effective_capacity(ctx.instance.capacity)
    tol = 1e-9 * max(1.0, cap_eff)
    q_cap = ctx.instance.capacity
    dets, ps, ss = [], [], []
    for trip in solution.trips:
        det, load, _sq2, p, s = _kernels.seq_stats(
            list(trip.tasks), ctx.task_tails, ctx.task_heads, ctx.task_cost,
            ctx.task_demand, ctx.dist.matrix, ctx.depot, q_cap, spec.k_noise)
        if load > cap_eff + tol:
            raise ObjectiveError(
                f"trip load {load} exceeds effective capacity {cap_eff}")
        dets.append(det)
        ps.append(p)
        ss.append(s)
    base_code, term_code, kw, cons_code, eps, m_extra = spec.kernel_codes()
    value = _kernels.objective_value(dets, ps, ss, len(dets), base_code,
                                     term_code, kw, cons_code, eps, m_extra)
    h = 0.0
    sum_sp = 0.0
    sum_var = 0.0
    sum_p = 0.0
    sum_vt = 0.0
    none_fails = 1.0
    max_p = 0.0
    for j in range(len(dets)):
        h += dets[j]
        sum_sp += ss[j] * ps[j]
        sum_var += ss[j] * ss[j] * (ps[j] - ps[j] * ps[j])
        sum_p += ps[j]
        sum_vt += ps[j] - ps[j] * ps[j]
        none_fails *= 1.0 - ps[j]
        max_p = max(max_p, ps[j])
    components = {
        "h": h,
        "mean_H": h + sum_sp,
        "sigma_H": math.sqrt(sum_var),
        "mean_T": len(dets) + sum_p,
        "sigma_T": math.sqrt(sum_vt),
        "prob_extra": 1.0 - none_fails,
        "max_p": max_p,
    }
    return Fitness(value=value, components=components)
