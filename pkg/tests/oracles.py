"""Independent oracles for cross-checking the production solver.

Everything here is deliberately written from scratch against the model
definition — dense matrices, hand-rolled Gaussian elimination, plain
Python sums — and must not call into the sparse solve path it checks.
"""

from __future__ import annotations

from gridgym.grid_model import BusModel, gen_ref, load_ref


def gaussian_solve(a: list[list[float]], b: list[float]) -> list[float]:
    """Dense Gaussian elimination with partial pivoting, pure Python."""
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot][col]) < 1e-12:
            raise ZeroDivisionError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor == 0.0:
                continue
            for c in range(col, n + 1):
                m[r][c] -= factor * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = m[r][n] - sum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = acc / m[r][r]
    return x


def dense_dc_solve(model: BusModel, gen_p: dict, load_p: dict) -> dict[str, float]:
    """Reference DC solve: dense B' per island, own assembly and elimination.

    Returns per-bus angles (radians) for buses in served islands; the
    island slack is the global slack when present, else the largest-p_max
    generator (ties to the lowest id), matching the documented election.
    """
    case = model.case
    theta: dict[str, float] = {}

    gens_by_bus: dict[str, list] = {}
    for g in case.generators:
        gens_by_bus.setdefault(model.bus_of_element[gen_ref(g.id)], []).append(g)

    net = {b.id: 0.0 for b in model.buses}
    for g in case.generators:
        net[model.bus_of_element[gen_ref(g.id)]] += gen_p[g.id]
    for d in case.loads:
        net[model.bus_of_element[load_ref(d.id)]] -= load_p[d.id]

    for island in model.islands:
        gens = [g for bus in island for g in gens_by_bus.get(bus, [])]
        if not gens:
            continue
        slack = case.slack_generator
        if model.bus_of_element[gen_ref(slack.id)] not in island:
            slack = min(gens, key=lambda g: (-g.p_max, g.id))
            required = -sum(net[b] for b in island) + gen_p[slack.id]
            if not (slack.p_min - 1e-6 <= required <= slack.p_max + 1e-6):
                continue  # local slack beyond capability: island collapses
        slack_bus = model.bus_of_element[gen_ref(slack.id)]

        others = [b for b in island if b != slack_bus]
        theta[slack_bus] = 0.0
        if not others:
            continue
        idx = {b: i for i, b in enumerate(others)}
        n = len(others)
        a = [[0.0] * n for _ in range(n)]
        for line in case.lines:
            pair = model.line_incidence.get(line.id)
            if pair is None or pair[0] not in island:
                continue
            susceptance = 1.0 / line.x_pu
            for bus, other in (pair, pair[::-1]):
                if bus == slack_bus:
                    continue
                i = idx[bus]
                a[i][i] += susceptance
                if other != slack_bus:
                    a[i][idx[other]] -= susceptance
        rhs = [net[b] / case.base_mva for b in others]
        for b, ang in zip(others, gaussian_solve(a, rhs)):
            theta[b] = ang
    return theta


def dense_line_flows(model: BusModel, theta: dict[str, float]) -> dict[str, float]:
    flows = {}
    for line in model.case.lines:
        pair = model.line_incidence.get(line.id)
        if pair is None:
            continue
        fb, tb = pair
        if fb in theta:
            flows[line.id] = (theta[fb] - theta[tb]) / line.x_pu * model.case.base_mva
        else:
            flows[line.id] = 0.0
    return flows


def recompute_score(log_steps: list[dict], gamma: float, termination: str) -> float:
    """Plain-sum reimplementation of the episode score."""
    if termination in ("blackout", "islanded_load"):
        return 0.0
    total = 0.0
    factor = 1.0
    for rec in log_steps:
        total += factor * rec["reward"]
        factor *= gamma
    return total
