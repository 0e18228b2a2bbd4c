import numpy as np
import pytest

from gridgym import (
    DcSolver,
    InjectionSet,
    default_topology,
    fundamental_cycles,
    kcl_residual,
    kvl_cycle_residual,
    loadings,
    reduce_to_buses,
    solve_dc,
)
from gridgym.errors import DimensionMismatch, NotACycle
from gridgym.grid_model import Generator, GridCase, Line, Load, Substation

from oracles import dense_dc_solve, dense_line_flows


def transfer_90(triangle_case):
    return InjectionSet(
        gen_p={"gen_a": 90.0, "gen_b": 0.0},
        load_p={"load_b": 90.0, "load_c": 0.0},
    )


def two_sub_case(lines):
    return GridCase(
        id="pair",
        base_mva=100.0,
        substations=(Substation("A", "A", 225.0), Substation("B", "B", 225.0)),
        lines=lines,
        generators=(Generator("g", "A", 0.0, 500.0, 50.0, slack=True),),
        loads=(Load("d", "B"),),
    )


class TestSolveDc:
    def test_triangle_superposition_values(self, triangle_case):
        # Equal reactances: the direct line takes 2/3 of a 90 MW transfer,
        # the two-hop path 1/3 (hand-derived; also pinned by the dense oracle).
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        sol = solve_dc(model, transfer_90(triangle_case))
        assert sol.line_flow["AB"] == pytest.approx(60.0, abs=1e-9)
        assert sol.line_flow["AC"] == pytest.approx(30.0, abs=1e-9)
        assert sol.line_flow["CB"] == pytest.approx(30.0, abs=1e-9)

    def test_series_path_after_outage(self, triangle_case):
        topo = default_topology(triangle_case).with_line_status("AB", False)
        model = reduce_to_buses(triangle_case, topo)
        sol = solve_dc(model, transfer_90(triangle_case))
        assert sol.line_flow["AC"] == pytest.approx(90.0, abs=1e-9)
        assert sol.line_flow["CB"] == pytest.approx(90.0, abs=1e-9)
        assert "AB" not in sol.line_flow

    def test_zero_injections(self, ieee14_case):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        inj = InjectionSet(
            gen_p={g.id: 0.0 for g in ieee14_case.generators},
            load_p={d.id: 0.0 for d in ieee14_case.loads},
        )
        sol = solve_dc(model, inj)
        assert all(v == 0.0 for v in sol.line_flow.values())
        assert all(v == 0.0 for v in sol.theta.values())

    def test_island_without_generator_unserved(self, fig5_case):
        topo = default_topology(fig5_case)
        for line_id in ("L34", "L45"):  # orphan S4, which has only a load
            topo = topo.with_line_status(line_id, False)
        model = reduce_to_buses(fig5_case, topo)
        inj = InjectionSet(
            gen_p={"gen_1": 100.0, "gen_2": 20.0, "gen_5": 20.0},
            load_p={"load_2": 30.0, "load_3": 50.0, "load_4": 40.0, "load_5": 20.0},
        )
        sol = solve_dc(model, inj)
        k4 = model.island_of_bus("S4:1")
        assert sol.island_served[k4] is False
        assert all(served for k, served in enumerate(sol.island_served) if k != k4)
        assert "S4:1" not in sol.theta

    def test_local_slack_elected_in_split_island(self, fig5_case):
        topo = default_topology(fig5_case)
        for line_id in ("L34", "L25"):  # {S4,S5} island keeps gen_5
            topo = topo.with_line_status(line_id, False)
        model = reduce_to_buses(fig5_case, topo)
        inj = InjectionSet(
            gen_p={"gen_1": 80.0, "gen_2": 20.0, "gen_5": 10.0},
            load_p={"load_2": 20.0, "load_3": 40.0, "load_4": 30.0, "load_5": 10.0},
        )
        sol = solve_dc(model, inj)
        assert sol.slack_p["gen_5"] == pytest.approx(40.0, abs=1e-9)  # d4 + d5
        assert sol.line_flow["L45"] == pytest.approx(-30.0, abs=1e-9)

    def test_dimension_mismatch(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        with pytest.raises(DimensionMismatch):
            solve_dc(model, InjectionSet(gen_p={"gen_a": 1.0}, load_p={"load_b": 1.0}))

    def test_lossless_balance(self, ieee14_case, ieee14_chronics):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        inj = InjectionSet(
            gen_p=ieee14_chronics.gen_row(100), load_p=ieee14_chronics.load_row(100)
        )
        sol = solve_dc(model, inj)
        gen_total = sum(
            sol.slack_p.get(g.id, inj.gen_p[g.id]) for g in ieee14_case.generators
        )
        assert gen_total - sum(inj.load_p.values()) == pytest.approx(0.0, abs=1e-9)

    def test_superposition(self, ieee14_case):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        rng = np.random.RandomState(7)
        gens = [g.id for g in ieee14_case.generators]
        loads = [d.id for d in ieee14_case.loads]
        for _ in range(20):
            def sample():
                g = {k: float(rng.uniform(0, 80)) for k in gens}
                d = {k: float(rng.uniform(0, 40)) for k in loads}
                return InjectionSet(gen_p=g, load_p=d)

            i1, i2 = sample(), sample()
            combined = InjectionSet(
                gen_p={k: i1.gen_p[k] + i2.gen_p[k] for k in gens},
                load_p={k: i1.load_p[k] + i2.load_p[k] for k in loads},
            )
            f1 = solve_dc(model, i1).line_flow
            f2 = solve_dc(model, i2).line_flow
            f12 = solve_dc(model, combined).line_flow
            for line_id in f12:
                assert f12[line_id] == pytest.approx(f1[line_id] + f2[line_id], abs=1e-9)

    def test_lower_reactance_attracts_flow(self):
        even = two_sub_case(
            (Line("p1", "A", "B", 0.2, 100.0), Line("p2", "A", "B", 0.2, 100.0))
        )
        inj = InjectionSet(gen_p={"g": 80.0}, load_p={"d": 80.0})
        sol = solve_dc(reduce_to_buses(even, default_topology(even)), inj)
        assert sol.line_flow["p1"] == pytest.approx(40.0, abs=1e-9)

        uneven = two_sub_case(
            (Line("p1", "A", "B", 0.1, 100.0), Line("p2", "A", "B", 0.2, 100.0))
        )
        sol2 = solve_dc(reduce_to_buses(uneven, default_topology(uneven)), inj)
        share_before = sol.line_flow["p1"] / 80.0
        share_after = sol2.line_flow["p1"] / 80.0
        assert share_after > share_before
        assert sol2.line_flow["p1"] == pytest.approx(2 * sol2.line_flow["p2"], abs=1e-9)


class TestAgainstDenseOracle:
    @pytest.mark.parametrize("name", ["triangle3", "fig5_5sub", "ieee14"])
    def test_angles_match_dense_elimination(self, repo_root, name):
        from gridgym import load_case

        case = load_case(repo_root / "cases" / f"{name}.json")
        model = reduce_to_buses(case, default_topology(case))
        rng = np.random.RandomState(42)
        gen_p = {g.id: float(rng.uniform(0, g.p_max / 2)) for g in case.generators}
        load_p = {d.id: float(rng.uniform(5, 50)) for d in case.loads}
        inj = InjectionSet(gen_p=gen_p, load_p=load_p)

        sol = solve_dc(model, inj)
        ref_theta = dense_dc_solve(model, gen_p, load_p)
        assert set(sol.theta) == set(ref_theta)
        for bus, angle in ref_theta.items():
            assert sol.theta[bus] == pytest.approx(angle, abs=1e-9)
        ref_flows = dense_line_flows(model, ref_theta)
        for line_id, f in ref_flows.items():
            assert sol.line_flow[line_id] == pytest.approx(f, abs=1e-9)


class TestKcl:
    def test_ieee14_residuals_tiny(self, ieee14_case, ieee14_chronics):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        inj = InjectionSet(
            gen_p=ieee14_chronics.gen_row(200), load_p=ieee14_chronics.load_row(200)
        )
        sol = solve_dc(model, inj)
        res = kcl_residual(model, inj, sol)
        assert max(abs(v) for v in res.values()) < 1e-9

    def test_corrupted_flow_shows_at_both_ends(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        inj = transfer_90(triangle_case)
        sol = solve_dc(model, inj)
        corrupt = type(sol)(
            theta=sol.theta,
            line_flow={**sol.line_flow, "AB": sol.line_flow["AB"] + 1.0},
            rho=sol.rho,
            island_served=sol.island_served,
            slack_p=sol.slack_p,
        )
        res = kcl_residual(model, inj, corrupt)
        assert res["A:1"] == pytest.approx(-1.0, abs=1e-9)
        assert res["B:1"] == pytest.approx(1.0, abs=1e-9)
        assert res["C:1"] == pytest.approx(0.0, abs=1e-9)

    def test_zero_case_exact_zero(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        inj = InjectionSet(gen_p={"gen_a": 0.0, "gen_b": 0.0}, load_p={"load_b": 0.0, "load_c": 0.0})
        sol = solve_dc(model, inj)
        assert all(v == 0.0 for v in kcl_residual(model, inj, sol).values())


class TestKvl:
    def test_triangle_cycle(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        sol = solve_dc(model, transfer_90(triangle_case))
        assert abs(kvl_cycle_residual(model, sol, ["AB", "CB", "AC"])) < 1e-12

    def test_open_path_rejected(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        sol = solve_dc(model, transfer_90(triangle_case))
        with pytest.raises(NotACycle):
            kvl_cycle_residual(model, sol, ["AB", "CB"])

    def test_out_of_service_line_rejected(self, triangle_case):
        topo = default_topology(triangle_case).with_line_status("AB", False)
        model = reduce_to_buses(triangle_case, topo)
        sol = solve_dc(model, transfer_90(triangle_case))
        with pytest.raises(NotACycle):
            kvl_cycle_residual(model, sol, ["AB", "CB", "AC"])

    def test_zero_flow_cycle_exact(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        inj = InjectionSet(gen_p={"gen_a": 0.0, "gen_b": 0.0}, load_p={"load_b": 0.0, "load_c": 0.0})
        sol = solve_dc(model, inj)
        assert kvl_cycle_residual(model, sol, ["AB", "CB", "AC"]) == 0.0

    def test_all_fundamental_cycles_ieee14(self, ieee14_case, ieee14_chronics):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        sol = solve_dc(
            model,
            InjectionSet(
                gen_p=ieee14_chronics.gen_row(0), load_p=ieee14_chronics.load_row(0)
            ),
        )
        cycles = fundamental_cycles(model)
        assert len(cycles) == 20 - 14 + 1  # E - V + islands
        for cycle in cycles:
            assert abs(kvl_cycle_residual(model, sol, cycle)) < 1e-12


class TestLoadings:
    def test_definition(self, triangle_case):
        model = reduce_to_buses(triangle_case, default_topology(triangle_case))
        sol = solve_dc(model, transfer_90(triangle_case))
        rho = loadings(triangle_case, sol)
        assert rho["AB"] == pytest.approx(0.6)       # 60 MW on a 100 MW line
        assert rho["CB"] == pytest.approx(30 / 36)
        assert rho == sol.rho

    def test_absolute_value(self, fig5_case):
        model = reduce_to_buses(fig5_case, default_topology(fig5_case))
        inj = InjectionSet(
            gen_p={"gen_1": 0.0, "gen_2": 0.0, "gen_5": 60.0},
            load_p={"load_2": 60.0, "load_3": 0.0, "load_4": 0.0, "load_5": 0.0},
        )
        sol = solve_dc(model, inj)
        assert sol.line_flow["L25"] < 0  # flows S5 -> S2 against orientation
        assert loadings(fig5_case, sol)["L25"] > 0

    def test_all_lines_out(self, triangle_case):
        topo = default_topology(triangle_case)
        for line in triangle_case.lines:
            topo = topo.with_line_status(line.id, False)
        model = reduce_to_buses(triangle_case, topo)
        sol = solve_dc(model, transfer_90(triangle_case))
        assert loadings(triangle_case, sol) == {}


class TestSolverCacheSafety:
    def test_solver_reuse_matches_fresh_solve(self, ieee14_case, ieee14_chronics):
        model = reduce_to_buses(ieee14_case, default_topology(ieee14_case))
        solver = DcSolver(model)
        for t in (0, 50, 150):
            inj = InjectionSet(
                gen_p=ieee14_chronics.gen_row(t), load_p=ieee14_chronics.load_row(t)
            )
            assert solver.solve(inj).line_flow == solve_dc(model, inj).line_flow
