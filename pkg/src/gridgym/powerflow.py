"""DC power-flow solver over the reduced bus model.

The linearized model: unit voltage magnitudes, lossless branches, flows
driven by angle differences over reactance. Per served island the solver
builds the reduced susceptance matrix B' (b = 1/x per line, slack row and
column removed), factors it once, and solves B'·theta = P for the bus
angles; branch flow is then f = (theta_i - theta_j) / x, scaled by the
MVA base to express MW.

Within each served island the island slack — the global slack if present,
else the generator with the largest p_max — absorbs the active-power
residual so the island balances exactly. An island is unserved when it
has no generator, or when its elected local slack would need an output
outside its [p_min, p_max] capability; unserved islands are not solved:
their buses carry no angle and their lines carry zero flow
(de-energized). The global slack's island is always solved; limit
violations there are the environment's business, not the solver's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .errors import DimensionMismatch, NotACycle, SingularSystem
from .grid_model import BusModel, GridCase, gen_ref, load_ref


@dataclass(frozen=True)
class InjectionSet:
    """Active power per generator and load, in MW (all entries >= 0).

    The slack generator's entry is a reference schedule only; its actual
    output is an outcome of balancing.
    """

    gen_p: dict[str, float]
    load_p: dict[str, float]

    def total_load(self) -> float:
        return sum(self.load_p.values())


@dataclass(frozen=True)
class FlowSolution:
    """Angles, branch flows, and loadings for one solve.

    theta covers only buses in served islands. line_flow and rho cover
    every in-service line (zero flow on de-energized islands);
    out-of-service lines carry no entries. slack_p records the balancing
    output actually assigned to each island slack generator.
    """

    theta: dict[str, float]
    line_flow: dict[str, float]
    rho: dict[str, float]
    island_served: tuple[bool, ...]
    slack_p: dict[str, float]

    def max_rho(self) -> float:
        return max(self.rho.values(), default=0.0)


def _check_dimensions(case: GridCase, inj: InjectionSet) -> None:
    want_gens = {g.id for g in case.generators}
    want_loads = {d.id for d in case.loads}
    if set(inj.gen_p) != want_gens:
        raise DimensionMismatch(
            f"generator entries {sorted(inj.gen_p)} do not match case generators {sorted(want_gens)}"
        )
    if set(inj.load_p) != want_loads:
        raise DimensionMismatch(
            f"load entries {sorted(inj.load_p)} do not match case loads {sorted(want_loads)}"
        )


class DcSolver:
    """Per-topology solver: factors each served island's B' exactly once.

    Immutable after construction; concurrent solve() calls with distinct
    injection sets are safe. Rebuild the solver whenever the topology
    changes (the environment caches instances keyed by topology).
    """

    def __init__(self, model: BusModel):
        self.model = model
        case = model.case
        self._islands = []

        global_slack = case.slack_generator
        gens_by_bus: dict[str, list] = {}
        for g in case.generators:
            bus = model.bus_of_element[gen_ref(g.id)]
            gens_by_bus.setdefault(bus, []).append(g)

        for island in model.islands:
            island_set = set(island)
            gens = [g for bus in island for g in gens_by_bus.get(bus, [])]
            if not gens:
                self._islands.append(None)  # unserved
                continue
            if model.slack_bus in island_set:
                slack_gen = global_slack
            else:
                slack_gen = min(gens, key=lambda g: (-g.p_max, g.id))
            slack_bus = model.bus_of_element[gen_ref(slack_gen.id)]

            solve_buses = [b for b in island if b != slack_bus]
            pos = {b: i for i, b in enumerate(solve_buses)}
            lines = [
                line for line in case.lines
                if line.id in model.line_incidence
                and model.line_incidence[line.id][0] in island_set
            ]

            n = len(solve_buses)
            lu = None
            if n > 0:
                rows, cols, vals = [], [], []
                for line in lines:
                    fb, tb = model.line_incidence[line.id]
                    b = 1.0 / line.x_pu
                    for bus, other in ((fb, tb), (tb, fb)):
                        if bus == slack_bus:
                            continue
                        i = pos[bus]
                        rows.append(i)
                        cols.append(i)
                        vals.append(b)
                        if other != slack_bus:
                            rows.append(i)
                            cols.append(pos[other])
                            vals.append(-b)
                bprime = csc_matrix((vals, (rows, cols)), shape=(n, n))
                try:
                    lu = splu(bprime)
                except RuntimeError as exc:
                    raise SingularSystem(
                        f"island containing bus {island[0]!r}: {exc}"
                    ) from exc
            self._islands.append(
                {
                    "buses": list(island),
                    "solve_buses": solve_buses,
                    "pos": pos,
                    "slack_gen": slack_gen,
                    "slack_bus": slack_bus,
                    "lines": lines,
                    "lu": lu,
                }
            )

    def solve(self, inj: InjectionSet) -> FlowSolution:
        model = self.model
        case = model.case
        _check_dimensions(case, inj)
        base = case.base_mva

        net_mw: dict[str, float] = {b.id: 0.0 for b in model.buses}
        for g in case.generators:
            net_mw[model.bus_of_element[gen_ref(g.id)]] += inj.gen_p[g.id]
        for d in case.loads:
            net_mw[model.bus_of_element[load_ref(d.id)]] -= inj.load_p[d.id]

        theta: dict[str, float] = {}
        line_flow: dict[str, float] = {}
        slack_p: dict[str, float] = {}
        served = []

        for spec in self._islands:
            if spec is None:
                served.append(False)
                continue
            slack_gen = spec["slack_gen"]
            slack_bus = spec["slack_bus"]

            # The slack generator covers whatever its island is short of:
            # its bus's implied net injection, minus colocated schedules.
            implied = -sum(net_mw[b] for b in spec["buses"] if b != slack_bus)
            colocated = net_mw[slack_bus] - inj.gen_p[slack_gen.id]
            required = implied - colocated
            if not slack_gen.slack and not (
                slack_gen.p_min - 1e-6 <= required <= slack_gen.p_max + 1e-6
            ):
                served.append(False)  # local slack cannot balance: collapse
                continue
            served.append(True)
            slack_p[slack_gen.id] = required

            theta[slack_bus] = 0.0
            if spec["lu"] is not None:
                p = np.array([net_mw[b] for b in spec["solve_buses"]]) / base
                angles = spec["lu"].solve(p)
                if not np.all(np.isfinite(angles)):
                    raise SingularSystem(
                        f"non-finite angles in island containing bus {slack_bus!r}"
                    )
                for b, ang in zip(spec["solve_buses"], angles):
                    theta[b] = float(ang)

            for line in spec["lines"]:
                fb, tb = model.line_incidence[line.id]
                line_flow[line.id] = (theta[fb] - theta[tb]) / line.x_pu * base

        for line in case.lines:
            if line.id in model.line_incidence and line.id not in line_flow:
                line_flow[line.id] = 0.0  # in service but de-energized

        rho = {
            line_id: abs(flow) / case.line(line_id).limit_mw
            for line_id, flow in line_flow.items()
        }
        return FlowSolution(
            theta=theta,
            line_flow=line_flow,
            rho=rho,
            island_served=tuple(served),
            slack_p=slack_p,
        )


def solve_dc(model: BusModel, inj: InjectionSet) -> FlowSolution:
    """One-shot solve; build a DcSolver directly when reusing a topology."""
    return DcSolver(model).solve(inj)


def kcl_residual(model: BusModel, inj: InjectionSet, sol: FlowSolution) -> dict[str, float]:
    """Per-bus current-law residual in MW: net injection minus flow leaving.

    Island slacks count at their balancing output, not their schedule.
    Buses of unserved islands are de-energized: injections there draw and
    produce nothing, so their residual is zero by definition.
    """
    case = model.case
    residual: dict[str, float] = {b.id: 0.0 for b in model.buses}
    served_buses = {
        bus
        for k, island in enumerate(model.islands)
        if sol.island_served[k]
        for bus in island
    }
    for g in case.generators:
        bus = model.bus_of_element[gen_ref(g.id)]
        if bus in served_buses:
            residual[bus] += sol.slack_p.get(g.id, inj.gen_p[g.id])
    for d in case.loads:
        bus = model.bus_of_element[load_ref(d.id)]
        if bus in served_buses:
            residual[bus] -= inj.load_p[d.id]
    for line_id, (fb, tb) in model.line_incidence.items():
        if fb in served_buses:
            flow = sol.line_flow[line_id]
            residual[fb] -= flow
            residual[tb] += flow
    return residual


def kvl_cycle_residual(model: BusModel, sol: FlowSolution, cycle: list[str]) -> float:
    """Loop-voltage residual: signed sum of x_l * f_l / base around a cycle.

    The walk orients each line as it is traversed; the result telescopes to
    zero for any true cycle of a consistent solution. Raises NotACycle if
    the lines do not chain into a closed loop of in-service lines.
    """
    if not cycle:
        raise NotACycle("empty line list")
    for line_id in cycle:
        if line_id not in model.line_incidence:
            raise NotACycle(f"line {line_id!r} is not in service")

    first_fb, first_tb = model.line_incidence[cycle[0]]
    if len(cycle) == 1:
        raise NotACycle("a single line cannot close a loop")
    next_ends = set(model.line_incidence[cycle[1]])
    if first_fb in next_ends and first_tb not in next_ends:
        start = first_tb
    elif first_tb in next_ends and first_fb not in next_ends:
        start = first_fb
    else:
        start = first_fb  # parallel-line ambiguity: keep line orientation

    base = model.case.base_mva
    total = 0.0
    at = start
    for line_id in cycle:
        fb, tb = model.line_incidence[line_id]
        if at == fb:
            sign, at = 1.0, tb
        elif at == tb:
            sign, at = -1.0, fb
        else:
            raise NotACycle(f"line {line_id!r} does not continue the walk at {at!r}")
        total += sign * model.case.line(line_id).x_pu * sol.line_flow[line_id] / base
    if at != start:
        raise NotACycle(f"walk ends at {at!r}, not back at {start!r}")
    return total


def loadings(case: GridCase, sol: FlowSolution) -> dict[str, float]:
    """Per-line loading rho = |flow| / thermal limit, in-service lines only."""
    return {
        line_id: abs(flow) / case.line(line_id).limit_mw
        for line_id, flow in sol.line_flow.items()
    }


def diagnostic_dump(model: BusModel, inj: InjectionSet) -> dict:
    """JSON-friendly dump of the reduced system and its solution, per island.

    Debugging aid for the CLI: dense B' rows, the per-unit injection
    vector, solved angles, and resulting flows.
    """
    sol = DcSolver(model).solve(inj)
    case = model.case
    islands = []
    for k, island in enumerate(model.islands):
        entry: dict = {"buses": list(island), "served": sol.island_served[k]}
        if sol.island_served[k]:
            slack_bus = next(b for b in island if sol.theta.get(b) == 0.0)
            others = [b for b in island if b != slack_bus]
            index = {b: i for i, b in enumerate(others)}
            n = len(others)
            dense = [[0.0] * n for _ in range(n)]
            for line in case.lines:
                pair = model.line_incidence.get(line.id)
                if pair is None or pair[0] not in set(island):
                    continue
                b = 1.0 / line.x_pu
                for bus, other in (pair, pair[::-1]):
                    if bus == slack_bus:
                        continue
                    i = index[bus]
                    dense[i][i] += b
                    if other != slack_bus:
                        dense[i][index[other]] -= b
            entry.update(
                slack_bus=slack_bus,
                solve_buses=others,
                bprime=dense,
                theta={b: sol.theta[b] for b in island},
            )
        islands.append(entry)
    return {
        "islands": islands,
        "line_flow": dict(sol.line_flow),
        "rho": dict(sol.rho),
        "slack_p": dict(sol.slack_p),
    }


def fundamental_cycles(model: BusModel) -> list[list[str]]:
    """Fundamental cycles of the in-service graph, one per non-tree line.

    A BFS spanning forest is grown in deterministic case order; every
    chord closes exactly one cycle: the chord followed by the tree path
    back from its to-bus to its from-bus. Each returned list walks a
    closed loop accepted by :func:`kvl_cycle_residual`.
    """
    case = model.case
    adjacency: dict[str, list[tuple[str, str]]] = {b.id: [] for b in model.buses}
    for line in case.lines:
        if line.id not in model.line_incidence:
            continue
        fb, tb = model.line_incidence[line.id]
        adjacency[fb].append((line.id, tb))
        adjacency[tb].append((line.id, fb))

    parent: dict[str, tuple[str, str] | None] = {}
    tree_lines: set[str] = set()
    for bus in (b.id for b in model.buses):
        if bus in parent:
            continue
        parent[bus] = None
        queue = [bus]
        while queue:
            cur = queue.pop(0)
            for line_id, nxt in adjacency[cur]:
                if nxt in parent or line_id in tree_lines:
                    continue
                parent[nxt] = (line_id, cur)
                tree_lines.add(line_id)
                queue.append(nxt)

    def path_to_root(bus: str) -> list[tuple[str, str]]:
        out = []
        while parent[bus] is not None:
            line_id, up = parent[bus]
            out.append((line_id, bus))
            bus = up
        return out

    cycles = []
    for line in case.lines:
        if line.id not in model.line_incidence or line.id in tree_lines:
            continue
        fb, tb = model.line_incidence[line.id]
        up_f = path_to_root(fb)
        up_t = path_to_root(tb)
        fset = {line_id for line_id, _ in up_f}
        # Drop the shared tail above the lowest common ancestor.
        shared = [line_id for line_id, _ in up_t if line_id in fset]
        up_t = [(l, b) for l, b in up_t if l not in shared]
        up_f = [(l, b) for l, b in up_f if l not in shared]
        # Walk: chord (fb -> tb), then tb up to the LCA, then down to fb.
        walk = [line.id]
        walk.extend(l for l, _ in up_t)
        walk.extend(l for l, _ in reversed(up_f))
        cycles.append(walk)
    return cycles
