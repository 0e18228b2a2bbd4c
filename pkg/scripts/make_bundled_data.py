"""Regenerate the bundled cases and chronics, deterministically.

Outputs (committed to the repository):
    cases/ieee14.json        14 substations, standard public branch data
    cases/fig5_5sub.json     5-substation switchable demo grid
    chronics/ieee14_day0/    288 steps (24 h at 5 min), benign diurnal day
    chronics/fig5_calm/      288 steps, benign diurnal day
    chronics/fig5_stress/    40 steps, rising load that overloads L13

The IEEE-14 dataset carries no thermal ratings, so limits are authored:
each line gets a round-number limit ~45% above the largest flow it sees
across the bundled day, keeping the default episode inside limits. The
fig5 grid's numbers are chosen so that under the stress chronics exactly
one line (L13) overloads and a busbar split at S3 relieves it.
"""

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from gridgym import (  # noqa: E402
    Chronics,
    InjectionSet,
    SynthProfile,
    default_topology,
    load_case,
    reduce_to_buses,
    solve_dc,
    synthesize_chronics,
    write_chronics,
)

IEEE14_BRANCHES = [
    ("S1", "S2", 0.05917), ("S1", "S5", 0.22304), ("S2", "S3", 0.19797),
    ("S2", "S4", 0.17632), ("S2", "S5", 0.17388), ("S3", "S4", 0.17103),
    ("S4", "S5", 0.04211), ("S4", "S7", 0.20912), ("S4", "S9", 0.55618),
    ("S5", "S6", 0.25202), ("S6", "S11", 0.19890), ("S6", "S12", 0.25581),
    ("S6", "S13", 0.13027), ("S7", "S8", 0.17615), ("S7", "S9", 0.11001),
    ("S9", "S10", 0.08450), ("S9", "S14", 0.27038), ("S10", "S11", 0.19207),
    ("S12", "S13", 0.19988), ("S13", "S14", 0.34802),
]

IEEE14_LOADS_MW = {
    "S2": 21.7, "S3": 94.2, "S4": 47.8, "S5": 7.6, "S6": 11.2, "S9": 29.5,
    "S10": 9.0, "S11": 3.5, "S12": 6.1, "S13": 13.5, "S14": 14.9,
}

IEEE14_GENS = [  # (sub, p_max, ramp, slack)
    ("S1", 332.4, 35.0, True),
    ("S2", 140.0, 15.0, False),
    ("S3", 100.0, 10.0, False),
    ("S6", 100.0, 10.0, False),
    ("S8", 100.0, 10.0, False),
]

IEEE14_POS = {
    "S1": (0.0, 2.2), "S2": (1.4, 3.0), "S3": (3.2, 3.4), "S4": (3.0, 2.0),
    "S5": (1.6, 1.6), "S6": (1.6, 0.2), "S7": (3.6, 1.2), "S8": (4.6, 1.2),
    "S9": (3.6, 0.4), "S10": (3.2, -0.4), "S11": (2.4, -0.6), "S12": (0.8, -0.8),
    "S13": (1.8, -1.2), "S14": (3.0, -1.4),
}


def build_ieee14(limits: dict[str, float]) -> dict:
    subs = sorted(IEEE14_POS, key=lambda s: int(s[1:]))
    return {
        "id": "ieee14",
        "base_mva": 100.0,
        "substations": [
            {"id": s, "name": f"BUS {s[1:]}", "kv": 69.0 if int(s[1:]) <= 5 else 13.8,
             "pos": list(IEEE14_POS[s])}
            for s in subs
        ],
        "lines": [
            {"id": f"L{f[1:]}_{t[1:]}", "from": f, "to": t, "x_pu": x,
             "limit_mw": limits.get(f"L{f[1:]}_{t[1:]}", 1.0)}
            for f, t, x in IEEE14_BRANCHES
        ],
        "generators": [
            {"id": f"gen_{s[1:]}", "sub": s, "p_min": 0.0, "p_max": pmax,
             "ramp": ramp, "slack": slack}
            for s, pmax, ramp, slack in IEEE14_GENS
        ],
        "loads": [
            {"id": f"load_{s[1:]}", "sub": s}
            for s in sorted(IEEE14_LOADS_MW, key=lambda s: int(s[1:]))
        ],
    }


def ieee14_profile() -> SynthProfile:
    return SynthProfile(
        peak_total_mw=259.0,
        load_share={f"load_{s[1:]}": mw for s, mw in IEEE14_LOADS_MW.items()},
        jitter=0.015,
    )


def make_ieee14():
    out = ROOT / "cases" / "ieee14.json"
    out.write_text(json.dumps(build_ieee14({}), indent=2) + "\n")
    case = load_case(out)
    chron = synthesize_chronics(case, steps=288, seed=14, profile=ieee14_profile())

    model = reduce_to_buses(case, default_topology(case))
    worst: dict[str, float] = {}
    for t in range(chron.steps):
        sol = solve_dc(model, InjectionSet(gen_p=chron.gen_row(t), load_p=chron.load_row(t)))
        for line_id, f in sol.line_flow.items():
            worst[line_id] = max(worst.get(line_id, 0.0), abs(f))
    limits = {k: max(10.0, math.ceil(v * 1.45 / 5.0) * 5.0) for k, v in worst.items()}
    out.write_text(json.dumps(build_ieee14(limits), indent=2) + "\n")

    write_chronics(chron, ROOT / "chronics" / "ieee14_day0")
    return load_case(out), chron


FIG5 = {
    "id": "fig5_5sub",
    "base_mva": 100.0,
    "substations": [
        {"id": "S1", "name": "S1", "kv": 225.0, "pos": [0.0, 1.2]},
        {"id": "S2", "name": "S2", "kv": 225.0, "pos": [1.6, 2.2]},
        {"id": "S3", "name": "S3", "kv": 225.0, "pos": [1.6, 0.2]},
        {"id": "S4", "name": "S4", "kv": 225.0, "pos": [3.2, 0.6]},
        {"id": "S5", "name": "S5", "kv": 225.0, "pos": [3.4, 2.0]},
    ],
    "lines": [
        {"id": "L12", "from": "S1", "to": "S2", "x_pu": 0.05, "limit_mw": 90.0},
        {"id": "L13", "from": "S1", "to": "S3", "x_pu": 0.04, "limit_mw": 80.0},
        {"id": "L23", "from": "S2", "to": "S3", "x_pu": 0.05, "limit_mw": 120.0},
        {"id": "L34", "from": "S3", "to": "S4", "x_pu": 0.05, "limit_mw": 70.0},
        {"id": "L45", "from": "S4", "to": "S5", "x_pu": 0.09, "limit_mw": 60.0},
        {"id": "L25", "from": "S2", "to": "S5", "x_pu": 0.09, "limit_mw": 60.0},
    ],
    "generators": [
        {"id": "gen_1", "sub": "S1", "p_min": 0.0, "p_max": 250.0, "ramp": 40.0, "slack": True},
        {"id": "gen_2", "sub": "S2", "p_min": 0.0, "p_max": 120.0, "ramp": 25.0, "slack": False},
        {"id": "gen_5", "sub": "S5", "p_min": 0.0, "p_max": 220.0, "ramp": 30.0, "slack": False},
    ],
    "loads": [
        {"id": "load_2", "sub": "S2"},
        {"id": "load_3", "sub": "S3"},
        {"id": "load_4", "sub": "S4"},
        {"id": "load_5", "sub": "S5"},
    ],
}


def make_fig5():
    out = ROOT / "cases" / "fig5_5sub.json"
    out.write_text(json.dumps(FIG5, indent=2) + "\n")
    case = load_case(out)

    calm = synthesize_chronics(
        case, steps=288, seed=5,
        profile=SynthProfile(
            peak_total_mw=150.0,
            load_share={"load_2": 15.0, "load_3": 60.0, "load_4": 50.0, "load_5": 25.0},
            jitter=0.01,
        ),
    )
    write_chronics(calm, ROOT / "chronics" / "fig5_calm")

    # Stress: load_3 climbs until L13 overloads, then holds; generation
    # keeps its dispatch shares, so the overload must be solved by topology.
    steps = 48
    load_rows, gen_rows = [], []
    for t in range(steps):
        ramp = min(1.0, t / 30.0)
        d2 = round(14.0 + 1.0 * ramp, 3)
        d3 = round(70.0 + 25.0 * ramp, 3)
        d4 = round(70.0 + 5.0 * ramp, 3)
        d5 = round(22.0 + 3.0 * ramp, 3)
        total = d2 + d3 + d4 + d5
        g2 = round(0.285 * total, 3)
        g5 = round(0.19 * total, 3)
        g1 = round(total - g2 - g5, 3)
        load_rows.append((d2, d3, d4, d5))
        gen_rows.append((g1, g2, g5))
    stress = Chronics(
        step_minutes=5,
        start="2026-01-15T17:00:00",
        load_ids=("load_2", "load_3", "load_4", "load_5"),
        gen_ids=("gen_1", "gen_2", "gen_5"),
        load_p=tuple(load_rows),
        gen_p=tuple(gen_rows),
    )
    write_chronics(stress, ROOT / "chronics" / "fig5_stress")
    return case, stress


def main():
    case14, chron14 = make_ieee14()
    model = reduce_to_buses(case14, default_topology(case14))
    worst = 0.0
    for t in range(chron14.steps):
        sol = solve_dc(model, InjectionSet(gen_p=chron14.gen_row(t), load_p=chron14.load_row(t)))
        worst = max(worst, max(sol.rho.values()))
    print(f"ieee14_day0: 288 steps, max rho {worst:.3f}")

    case5, stress = make_fig5()
    model5 = reduce_to_buses(case5, default_topology(case5))
    for t in (0, 20, 39):
        sol = solve_dc(model5, InjectionSet(gen_p=stress.gen_row(t), load_p=stress.load_row(t)))
        print(f"fig5_stress t={t}: rho =",
              {k: round(v, 3) for k, v in sorted(sol.rho.items())})


if __name__ == "__main__":
    main()
