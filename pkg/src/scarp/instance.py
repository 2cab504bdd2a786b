"""Instance model for capacitated arc routing on undirected networks.

An instance is a set of nodes, a depot, a vehicle capacity and a list of
edges; edges with positive demand are *tasks* and must be serviced.  Two
on-disk layouts are supported:

* the canonical line-oriented format (``NAME``/``NODES``/``DEPOT``/
  ``CAPACITY``/``EDGES`` records, see :func:`parse_instance`), and
* the classic benchmark ``.dat`` layouts (both the Spanish-keyword variant
  and the English table variant), converted via :func:`import_classic`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class InstanceError(ValueError):
    """Malformed or semantically invalid instance data."""


class InstanceFormatError(InstanceError):
    """Syntax error; carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    cost: float      # traversal and service cost, same units
    demand: float    # mean demand; > 0 means the edge must be serviced
    required: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "required", self.demand > 0.0)


@dataclass(frozen=True)
class Instance:
    name: str
    node_count: int
    depot: int
    capacity: float
    edges: tuple[Edge, ...]
    reference_dcarp_cost: float | None = None  # user-supplied best-known cost

    @property
    def required_edge_indices(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.edges) if e.required)

    @property
    def task_count(self) -> int:
        return sum(1 for e in self.edges if e.required)


def validate(instance: Instance) -> list[str]:
    """Return one human-readable description per violated invariant.

    An empty list means the instance is valid.  Violations are data, not
    errors: callers decide whether to raise.
    """
    out: list[str] = []
    n = instance.node_count
    if n < 1:
        out.append(f"node count must be positive, got {n}")
    if not (1 <= instance.depot <= n):
        out.append(f"depot {instance.depot} outside node range 1..{n}")
    if instance.capacity <= 0:
        out.append(f"capacity must be positive, got {instance.capacity}")
    if instance.reference_dcarp_cost is not None and instance.reference_dcarp_cost <= 0:
        out.append("reference cost must be positive when present")
    for i, e in enumerate(instance.edges):
        tag = f"edge {i + 1} ({e.u},{e.v})"
        if not (1 <= e.u <= n and 1 <= e.v <= n):
            out.append(f"{tag}: endpoint outside node range 1..{n}")
        if e.cost <= 0:
            out.append(f"{tag}: cost must be positive, got {e.cost}")
        if e.demand < 0:
            out.append(f"{tag}: negative demand {e.demand}")
        elif e.demand > instance.capacity:
            out.append(f"{tag}: demand exceeds capacity ({e.demand} > {instance.capacity})")
    if instance.task_count < 1:
        out.append("instance has no required edge")
    out.extend(_connectivity_violations(instance))
    return out


def _connectivity_violations(instance: Instance) -> list[str]:
    n = instance.node_count
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for e in instance.edges:
        if 1 <= e.u <= n and 1 <= e.v <= n:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
    if not (1 <= instance.depot <= n):
        return []
    seen = [False] * (n + 1)
    seen[instance.depot] = True
    stack = [instance.depot]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    out = []
    for i, e in enumerate(instance.edges):
        if e.required and 1 <= e.u <= n and 1 <= e.v <= n and not (seen[e.u] and seen[e.v]):
            out.append(f"required edge {i + 1} ({e.u},{e.v}) disconnected from depot")
    return out


def _num(text: str) -> float:
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("non-finite value")
    return value


def parse_instance(text: str) -> Instance:
    """Parse canonical instance text; raises on syntax or semantic errors."""
    name = None
    node_count = None
    depot = None
    capacity = None
    reference = None
    edge_total = None
    edges: list[Edge] = []
    in_edges = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].upper()
        if not in_edges:
            try:
                if key == "NAME":
                    name = line[len(parts[0]):].strip()
                elif key == "NODES":
                    node_count = int(parts[1])
                elif key == "DEPOT":
                    depot = int(parts[1])
                elif key == "CAPACITY":
                    capacity = _num(parts[1])
                elif key == "REFERENCE":
                    reference = _num(parts[1])
                elif key == "EDGES":
                    edge_total = int(parts[1])
                    in_edges = True
                else:
                    raise InstanceFormatError(line_no, f"unknown record {parts[0]!r}")
            except InstanceFormatError:
                raise
            except (IndexError, ValueError) as exc:
                raise InstanceFormatError(line_no, f"bad {key} record: {exc}") from exc
        else:
            if len(parts) != 4:
                raise InstanceFormatError(line_no, f"expected 'u v cost demand', got {line!r}")
            try:
                edges.append(Edge(int(parts[0]), int(parts[1]), _num(parts[2]), _num(parts[3])))
            except ValueError as exc:
                raise InstanceFormatError(line_no, f"bad edge record: {exc}") from exc

    for label, value in (("NAME", name), ("NODES", node_count), ("DEPOT", depot),
                         ("CAPACITY", capacity), ("EDGES", edge_total)):
        if value is None:
            raise InstanceError(f"missing {label} record")
    if len(edges) != edge_total:
        raise InstanceError(f"EDGES declares {edge_total} edges, found {len(edges)}")

    instance = Instance(name=name, node_count=node_count, depot=depot,
                        capacity=capacity, edges=tuple(edges),
                        reference_dcarp_cost=reference)
    violations = validate(instance)
    if violations:
        raise InstanceError("; ".join(violations))
    return instance


def _fmt(value: float) -> str:
    return repr(int(value)) if float(value).is_integer() else repr(float(value))


def serialize_instance(instance: Instance) -> str:
    """Canonical text form; `parse_instance` round-trips it field-for-field."""
    lines = [
        f"NAME {instance.name}",
        f"NODES {instance.node_count}",
        f"DEPOT {instance.depot}",
        f"CAPACITY {_fmt(instance.capacity)}",
    ]
    if instance.reference_dcarp_cost is not None:
        lines.append(f"REFERENCE {_fmt(instance.reference_dcarp_cost)}")
    lines.append(f"EDGES {len(instance.edges)}")
    for e in instance.edges:
        lines.append(f"{e.u} {e.v} {_fmt(e.cost)} {_fmt(e.demand)}")
    return "\n".join(lines) + "\n"


_CLASSIC_KEYS_ES = {
    "NOMBRE": "name", "VERTICES": "nodes", "ARISTAS_REQ": "req",
    "ARISTAS_NOREQ": "noreq", "VEHICULOS": "vehicles", "CAPACIDAD": "capacity",
    "DEPOSITO": "depot",
}
_CLASSIC_KEYS_EN = {
    "NAME": "name", "VERTICES": "nodes", "DEPOT": "depot",
    "REQUIRED EDGES": "req", "NON-REQUIRED EDGES": "noreq",
    "VEHICLES": "vehicles", "CAPACITY": "capacity",
    "TOTAL COST OF REQUIRED EDGES": "total_cost", "REFERENCE": "reference",
}


def import_classic(text: str) -> Instance:
    """Convert a classic benchmark ``.dat`` file into an :class:`Instance`.

    Handles both circulating dialects: keyword-prefixed Spanish sections
    (``LISTA_ARISTAS_REQ`` entries like ``( 1, 2) coste 13 demanda 1``) and
    the English header plus ``NODES COST DEMAND`` table ended by ``END``.
    """
    meta: dict[str, object] = {}
    edges: list[Edge] = []
    mode = None  # None | "req" | "noreq" | "table"

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("LISTA_ARISTAS_REQ"):
            mode = "req"
            continue
        if upper.startswith("LISTA_ARISTAS_NOREQ"):
            mode = "noreq"
            continue
        if upper in ("NODES COST DEMAND", "NODES   COST   DEMAND"):
            mode = "table"
            continue
        if upper.startswith("END"):
            mode = None
            continue
        if ":" in line:
            key, _, value = line.partition(":")
            key_u = key.strip().upper()
            value = value.strip()
            field_name = _CLASSIC_KEYS_ES.get(key_u) or _CLASSIC_KEYS_EN.get(key_u)
            if field_name is not None:
                meta[field_name] = value
                if field_name == "depot":
                    mode = None
                continue
            if key_u in ("COMENTARIO", "TIPO_COSTES_ARISTAS", "COSTE_TOTAL_REQ"):
                continue
        if mode == "req" or mode == "noreq":
            edges.append(_parse_classic_edge(line, line_no, required=mode == "req"))
        elif mode == "table":
            parts = line.split()
            if len(parts) != 4:
                raise InstanceFormatError(line_no, f"expected 'u v cost demand', got {line!r}")
            edges.append(Edge(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
        elif ":" not in line:
            raise InstanceFormatError(line_no, f"unrecognised line {line!r}")

    for needed in ("nodes", "depot", "capacity"):
        if needed not in meta:
            raise InstanceError(f"classic file missing {needed.upper()} header")
    for key, count in (("req", sum(1 for e in edges if e.required)),
                       ("noreq", sum(1 for e in edges if not e.required))):
        if key in meta and int(str(meta[key])) != count:
            raise InstanceError(
                f"header declares {meta[key]} {key} edges, found {count}")
    reference = float(meta["reference"]) if "reference" in meta else None
    instance = Instance(
        name=str(meta.get("name", "unnamed")).strip(),
        node_count=int(str(meta["nodes"])),
        depot=int(str(meta["depot"])),
        capacity=float(str(meta["capacity"])),
        edges=tuple(edges),
        reference_dcarp_cost=reference,
    )
    violations = validate(instance)
    if violations:
        raise InstanceError("; ".join(violations))
    return instance


def _parse_classic_edge(line: str, line_no: int, required: bool) -> Edge:
    # e.g. "( 1, 2)   coste 13   demanda 1"  /  "( 1, 2)   coste 13"
    try:
        head, _, tail = line.partition(")")
        u_s, v_s = head.replace("(", "").split(",")
        tokens = tail.replace("coste", " ").replace("demanda", " ").split()
        cost = float(tokens[0])
        demand = float(tokens[1]) if required else 0.0
        return Edge(int(u_s), int(v_s), cost, demand)
    except (ValueError, IndexError) as exc:
        raise InstanceFormatError(line_no, f"bad classic edge record: {line!r}") from exc


def load_instance(path: str | Path) -> Instance:
    """Load canonical or classic instance text, sniffing the layout."""
    text = Path(path).read_text(encoding="utf-8")
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key = line.split()[0].upper()
        if key in ("NOMBRE", "COMENTARIO") or ":" in line:
            return import_classic(text)
        return parse_instance(text)
    raise InstanceError("empty instance file")
