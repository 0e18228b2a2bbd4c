"""Static grid description, switchable topology, and bus-branch reduction.

A grid case is immutable once loaded. The switchable state lives in a
:class:`Topology`: per-line in/out status plus, for every connectable
element (line endpoint, generator, load), an assignment to busbar 1 or 2
of its substation. :func:`reduce_to_buses` collapses that node-breaker
view into electrical buses and islands for the power-flow solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CaseFormatError

BUSBARS = (1, 2)


# --------------------------------------------------------------------------
# Element references
#
# Connectable elements are addressed by flat string refs so they can be used
# as JSON keys and sorted deterministically:
#   "gen:<id>", "load:<id>", "line_from:<id>", "line_to:<id>"
# --------------------------------------------------------------------------

def gen_ref(gen_id: str) -> str:
    return f"gen:{gen_id}"


def load_ref(load_id: str) -> str:
    return f"load:{load_id}"


def line_from_ref(line_id: str) -> str:
    return f"line_from:{line_id}"


def line_to_ref(line_id: str) -> str:
    return f"line_to:{line_id}"


@dataclass(frozen=True)
class Substation:
    id: str
    name: str
    kv: float
    pos: tuple[float, float] | None = None  # optional display hint


@dataclass(frozen=True)
class Line:
    id: str
    from_sub: str
    to_sub: str
    x_pu: float
    limit_mw: float


@dataclass(frozen=True)
class Generator:
    id: str
    sub: str
    p_min: float
    p_max: float
    ramp: float
    slack: bool = False


@dataclass(frozen=True)
class Load:
    id: str
    sub: str


@dataclass(frozen=True)
class GridCase:
    """Immutable static network description.

    Safe to share across threads; all lookup tables are built once at
    construction and never mutated.
    """

    id: str
    base_mva: float
    substations: tuple[Substation, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]

    _sub_by_id: dict = field(init=False, repr=False, compare=False)
    _line_by_id: dict = field(init=False, repr=False, compare=False)
    _gen_by_id: dict = field(init=False, repr=False, compare=False)
    _load_by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sub_by_id", {s.id: s for s in self.substations})
        object.__setattr__(self, "_line_by_id", {l.id: l for l in self.lines})
        object.__setattr__(self, "_gen_by_id", {g.id: g for g in self.generators})
        object.__setattr__(self, "_load_by_id", {d.id: d for d in self.loads})

    def substation(self, sub_id: str) -> Substation:
        return self._sub_by_id[sub_id]

    def line(self, line_id: str) -> Line:
        return self._line_by_id[line_id]

    def generator(self, gen_id: str) -> Generator:
        return self._gen_by_id[gen_id]

    def load(self, load_id: str) -> Load:
        return self._load_by_id[load_id]

    def has_line(self, line_id: str) -> bool:
        return line_id in self._line_by_id

    @property
    def slack_generator(self) -> Generator:
        for g in self.generators:
            if g.slack:
                return g
        raise CaseFormatError(f"case {self.id!r} has no slack generator")

    def element_refs(self) -> list[str]:
        """All connectable element refs, in case order."""
        refs = []
        for line in self.lines:
            refs.append(line_from_ref(line.id))
            refs.append(line_to_ref(line.id))
        for g in self.generators:
            refs.append(gen_ref(g.id))
        for d in self.loads:
            refs.append(load_ref(d.id))
        return refs

    def substation_of_ref(self, ref: str) -> str:
        """Substation hosting a connectable element ref."""
        kind, _, elem_id = ref.partition(":")
        if kind == "gen":
            return self._gen_by_id[elem_id].sub
        if kind == "load":
            return self._load_by_id[elem_id].sub
        if kind == "line_from":
            return self._line_by_id[elem_id].from_sub
        if kind == "line_to":
            return self._line_by_id[elem_id].to_sub
        raise KeyError(f"unknown element ref {ref!r}")

    def refs_of_substation(self, sub_id: str) -> list[str]:
        """Connectable element refs at one substation, in case order."""
        return [r for r in self.element_refs() if self.substation_of_ref(r) == sub_id]


@dataclass(frozen=True)
class Topology:
    """Switchable state: per-line status plus per-element busbar assignment.

    Value type: mutation happens by producing new instances (see
    :func:`apply_topology_delta`). An out-of-service line keeps its endpoint
    assignments; they come back into play on reconnection.
    """

    line_status: dict[str, bool]
    busbar_of: dict[str, int]

    def with_line_status(self, line_id: str, status: bool) -> "Topology":
        new_status = dict(self.line_status)
        new_status[line_id] = status
        return Topology(new_status, dict(self.busbar_of))


@dataclass(frozen=True)
class TopologyDelta:
    """A sparse change request against a Topology.

    Busbar moves must name the single substation they touch; line status
    changes are exempt from the one-substation rule.
    """

    line_status: dict[str, bool] = field(default_factory=dict)
    busbars: dict[str, int] = field(default_factory=dict)
    substation: str | None = None


@dataclass(frozen=True)
class Bus:
    """One electrical bus: the elements sharing one busbar of one substation."""

    id: str
    substation: str
    busbar: int
    elements: tuple[str, ...]


@dataclass(frozen=True)
class BusModel:
    """Bus-branch reduction of (case, topology): buses, islands, incidence.

    Pure value derived from its inputs; identical inputs yield an identical
    model. Buses exist only for (substation, busbar) pairs holding at least
    one element. Islands partition the buses via in-service lines.
    """

    case: GridCase
    buses: tuple[Bus, ...]
    islands: tuple[tuple[str, ...], ...]
    slack_bus: str | None
    line_incidence: dict[str, tuple[str, str]]
    bus_of_element: dict[str, str]

    def bus_index(self, bus_id: str) -> int:
        return self._bus_index[bus_id]

    def island_of_bus(self, bus_id: str) -> int:
        return self._island_of_bus[bus_id]

    _bus_index: dict = field(init=False, repr=False, compare=False)
    _island_of_bus: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_bus_index", {b.id: i for i, b in enumerate(self.buses)})
        object.__setattr__(
            self, "_island_of_bus",
            {bus: k for k, isl in enumerate(self.islands) for bus in isl},
        )


# --------------------------------------------------------------------------
# Case file I/O
# --------------------------------------------------------------------------

def case_from_dict(doc: dict, case_id: str = "case") -> GridCase:
    try:
        subs = tuple(
            Substation(
                id=str(s["id"]),
                name=str(s.get("name", s["id"])),
                kv=float(s["kv"]),
                pos=tuple(float(v) for v in s["pos"]) if s.get("pos") is not None else None,
            )
            for s in doc["substations"]
        )
        lines = tuple(
            Line(
                id=str(l["id"]),
                from_sub=str(l["from"]),
                to_sub=str(l["to"]),
                x_pu=float(l["x_pu"]),
                limit_mw=float(l["limit_mw"]),
            )
            for l in doc["lines"]
        )
        gens = tuple(
            Generator(
                id=str(g["id"]),
                sub=str(g["sub"]),
                p_min=float(g["p_min"]),
                p_max=float(g["p_max"]),
                ramp=float(g["ramp"]),
                slack=bool(g["slack"]),
            )
            for g in doc["generators"]
        )
        loads = tuple(Load(id=str(d["id"]), sub=str(d["sub"])) for d in doc["loads"])
        return GridCase(
            id=str(doc.get("id", case_id)),
            base_mva=float(doc["base_mva"]),
            substations=subs,
            lines=lines,
            generators=gens,
            loads=loads,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CaseFormatError(f"malformed case document: {exc}") from exc


def case_to_dict(case: GridCase) -> dict:
    doc = {
        "id": case.id,
        "base_mva": case.base_mva,
        "substations": [
            {"id": s.id, "name": s.name, "kv": s.kv}
            | ({"pos": list(s.pos)} if s.pos is not None else {})
            for s in case.substations
        ],
        "lines": [
            {"id": l.id, "from": l.from_sub, "to": l.to_sub, "x_pu": l.x_pu, "limit_mw": l.limit_mw}
            for l in case.lines
        ],
        "generators": [
            {"id": g.id, "sub": g.sub, "p_min": g.p_min, "p_max": g.p_max, "ramp": g.ramp, "slack": g.slack}
            for g in case.generators
        ],
        "loads": [{"id": d.id, "sub": d.sub} for d in case.loads],
    }
    return doc


def load_case(path: str | Path) -> GridCase:
    """Load and parse a JSON case file. Raises CaseFormatError on bad content."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CaseFormatError(f"{path}: top level must be a JSON object")
    return case_from_dict(doc, case_id=path.stem)


def save_case(case: GridCase, path: str | Path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(case), indent=2) + "\n")


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def validate_case(case: GridCase) -> list[str]:
    """Check every case invariant; returns one message per violation.

    Violations are data, not failures: an empty list means the case is
    well formed.
    """
    problems: list[str] = []

    for label, items in (
        ("substation", case.substations),
        ("line", case.lines),
        ("generator", case.generators),
        ("load", case.loads),
    ):
        seen = set()
        for item in items:
            if item.id in seen:
                problems.append(f"duplicate {label} id {item.id!r}")
            seen.add(item.id)

    sub_ids = {s.id for s in case.substations}
    for line in case.lines:
        if line.from_sub not in sub_ids:
            problems.append(f"line {line.id!r} references unknown substation {line.from_sub!r}")
        if line.to_sub not in sub_ids:
            problems.append(f"line {line.id!r} references unknown substation {line.to_sub!r}")
        if line.from_sub == line.to_sub:
            problems.append(f"line {line.id!r} connects substation {line.from_sub!r} to itself")
        if not line.x_pu > 0:
            problems.append(f"line {line.id!r} has non-positive reactance x={line.x_pu}")
        if not line.limit_mw > 0:
            problems.append(f"line {line.id!r} has non-positive thermal limit {line.limit_mw}")

    slack_ids = [g.id for g in case.generators if g.slack]
    if len(slack_ids) == 0:
        problems.append("no slack generator designated")
    elif len(slack_ids) > 1:
        problems.append(f"multiple slack generators: {slack_ids}")

    for g in case.generators:
        if g.sub not in sub_ids:
            problems.append(f"generator {g.id!r} references unknown substation {g.sub!r}")
        if g.p_min > g.p_max:
            problems.append(f"generator {g.id!r} has p_min {g.p_min} > p_max {g.p_max}")
        if g.ramp < 0:
            problems.append(f"generator {g.id!r} has negative ramp {g.ramp}")

    for d in case.loads:
        if d.sub not in sub_ids:
            problems.append(f"load {d.id!r} references unknown substation {d.sub!r}")

    if not case.base_mva > 0:
        problems.append(f"base_mva must be positive, got {case.base_mva}")

    return problems


# --------------------------------------------------------------------------
# Topology operations
# --------------------------------------------------------------------------

def default_topology(case: GridCase) -> Topology:
    """All lines in service, every element on busbar 1 (substations fused)."""
    return Topology(
        line_status={l.id: True for l in case.lines},
        busbar_of={ref: 1 for ref in case.element_refs()},
    )


def apply_topology_delta(topo: Topology, delta: TopologyDelta) -> Topology:
    """Apply a sparse delta, returning a new Topology.

    Rejects busbar ids outside {1, 2} and references to elements or lines
    the topology does not know about. An empty delta returns an equal copy.
    """
    if delta.busbars and delta.substation is None:
        raise ValueError("busbar changes must name their substation")

    new_status = dict(topo.line_status)
    for line_id, status in delta.line_status.items():
        if line_id not in new_status:
            raise ValueError(f"unknown line {line_id!r}")
        new_status[line_id] = bool(status)

    new_busbars = dict(topo.busbar_of)
    for ref, busbar in delta.busbars.items():
        if ref not in new_busbars:
            raise ValueError(f"unknown element {ref!r}")
        if busbar not in BUSBARS:
            raise ValueError(f"busbar must be 1 or 2, got {busbar!r} for {ref!r}")
        new_busbars[ref] = int(busbar)

    return Topology(new_status, new_busbars)


class _UnionFind:
    """Minimal union-find with path compression, over range(n)."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def reduce_to_buses(case: GridCase, topo: Topology) -> BusModel:
    """Collapse (case, topology) into electrical buses and islands.

    A bus is one occupied (substation, busbar) pair; empty busbars produce
    no bus. Islands are connected components over in-service lines only;
    out-of-service lines appear in no incidence entry. Elements of an
    out-of-service line still occupy their busbars.
    """
    refs = case.element_refs()
    known = set(refs)
    for ref in topo.busbar_of:
        if ref not in known:
            raise ValueError(f"busbar assignment references unknown element {ref!r}")
    for ref in refs:
        if ref not in topo.busbar_of:
            raise ValueError(f"element {ref!r} has no busbar assignment")
    for line_id in topo.line_status:
        if not case.has_line(line_id):
            raise ValueError(f"line status references unknown line {line_id!r}")
    for line in case.lines:
        if line.id not in topo.line_status:
            raise ValueError(f"line {line.id!r} has no status entry")

    sub_order = {s.id: i for i, s in enumerate(case.substations)}
    groups: dict[tuple[int, int], list[str]] = {}
    for ref in refs:
        sub = case.substation_of_ref(ref)
        busbar = topo.busbar_of[ref]
        groups.setdefault((sub_order[sub], busbar), []).append(ref)

    buses = []
    bus_of_element: dict[str, str] = {}
    for (sub_idx, busbar) in sorted(groups):
        sub_id = case.substations[sub_idx].id
        bus_id = f"{sub_id}:{busbar}"
        elements = tuple(sorted(groups[(sub_idx, busbar)]))
        buses.append(Bus(id=bus_id, substation=sub_id, busbar=busbar, elements=elements))
        for ref in elements:
            bus_of_element[ref] = bus_id

    bus_index = {b.id: i for i, b in enumerate(buses)}
    incidence: dict[str, tuple[str, str]] = {}
    uf = _UnionFind(len(buses))
    for line in case.lines:
        if not topo.line_status[line.id]:
            continue
        fb = bus_of_element[line_from_ref(line.id)]
        tb = bus_of_element[line_to_ref(line.id)]
        incidence[line.id] = (fb, tb)
        uf.union(bus_index[fb], bus_index[tb])

    components: dict[int, list[str]] = {}
    for i, bus in enumerate(buses):
        components.setdefault(uf.find(i), []).append(bus.id)
    islands = tuple(tuple(members) for _, members in sorted(components.items()))

    slack = case.slack_generator
    slack_bus = bus_of_element.get(gen_ref(slack.id))

    return BusModel(
        case=case,
        buses=tuple(buses),
        islands=islands,
        slack_bus=slack_bus,
        line_incidence=incidence,
        bus_of_element=bus_of_element,
    )


# --------------------------------------------------------------------------
# Canonical dict forms (for determinism checks and the wire protocol)
# --------------------------------------------------------------------------

def topology_to_dict(topo: Topology) -> dict:
    return {
        "line_status": {k: topo.line_status[k] for k in sorted(topo.line_status)},
        "busbar_of": {k: topo.busbar_of[k] for k in sorted(topo.busbar_of)},
    }


def topology_from_dict(doc: dict) -> Topology:
    return Topology(
        line_status={str(k): bool(v) for k, v in doc["line_status"].items()},
        busbar_of={str(k): int(v) for k, v in doc["busbar_of"].items()},
    )


def bus_model_to_dict(model: BusModel) -> dict:
    return {
        "buses": [
            {"id": b.id, "substation": b.substation, "busbar": b.busbar, "elements": list(b.elements)}
            for b in model.buses
        ],
        "islands": [list(isl) for isl in model.islands],
        "slack_bus": model.slack_bus,
        "line_incidence": {k: list(v) for k, v in sorted(model.line_incidence.items())},
    }
