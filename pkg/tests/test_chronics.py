import pytest

from gridgym import (
    SynthProfile,
    load_chronics,
    synthesize_chronics,
    write_chronics,
)
from gridgym.errors import InfeasibleProfile, ParseError, ValidationError


class TestLoadChronics:
    def test_bundled_day_has_288_steps(self, ieee14_chronics):
        assert ieee14_chronics.steps == 288
        assert ieee14_chronics.step_minutes == 5
        assert len(ieee14_chronics.load_ids) == 11
        assert len(ieee14_chronics.gen_ids) == 5

    def test_negative_value_names_row_and_column(self, tmp_path):
        d = tmp_path / "ep"
        d.mkdir()
        (d / "meta.json").write_text('{"step_minutes": 5, "start": "2026-01-01T00:00:00"}')
        (d / "load_p.csv").write_text("d1,d2\n10,20\n10,-3\n")
        (d / "gen_p.csv").write_text("g1\n30\n30\n")
        with pytest.raises(ValidationError) as err:
            load_chronics(d)
        assert "row 2" in str(err.value) and "d2" in str(err.value)

    def test_empty_file_is_parse_error(self, tmp_path):
        d = tmp_path / "ep"
        d.mkdir()
        (d / "meta.json").write_text('{"step_minutes": 5, "start": "2026-01-01T00:00:00"}')
        (d / "load_p.csv").write_text("")
        (d / "gen_p.csv").write_text("g1\n30\n")
        with pytest.raises(ParseError):
            load_chronics(d)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(ParseError):
            load_chronics(tmp_path / "nope")

    def test_nan_rejected(self, tmp_path):
        d = tmp_path / "ep"
        d.mkdir()
        (d / "meta.json").write_text('{"step_minutes": 5, "start": "2026-01-01T00:00:00"}')
        (d / "load_p.csv").write_text("d1\nnan\n")
        (d / "gen_p.csv").write_text("g1\n30\n")
        with pytest.raises(ValidationError):
            load_chronics(d)

    def test_ragged_rows_rejected(self, tmp_path):
        d = tmp_path / "ep"
        d.mkdir()
        (d / "meta.json").write_text('{"step_minutes": 5, "start": "2026-01-01T00:00:00"}')
        (d / "load_p.csv").write_text("d1,d2\n10\n")
        (d / "gen_p.csv").write_text("g1\n30\n")
        with pytest.raises(ValidationError):
            load_chronics(d)


class TestRoundTrip:
    def test_write_then_load_identical(self, triangle_case, tmp_path):
        chron = synthesize_chronics(triangle_case, steps=50, seed=3)
        write_chronics(chron, tmp_path / "ep")
        again = load_chronics(tmp_path / "ep")
        assert again == chron

    def test_bundled_round_trip(self, ieee14_chronics, tmp_path):
        write_chronics(ieee14_chronics, tmp_path / "ep")
        assert load_chronics(tmp_path / "ep") == ieee14_chronics


class TestSynthesize:
    def test_same_seed_identical(self, ieee14_case):
        a = synthesize_chronics(ieee14_case, steps=30, seed=9)
        b = synthesize_chronics(ieee14_case, steps=30, seed=9)
        assert a == b

    def test_different_seed_differs(self, ieee14_case):
        a = synthesize_chronics(ieee14_case, steps=30, seed=9)
        b = synthesize_chronics(ieee14_case, steps=30, seed=10)
        assert a != b

    def test_single_step(self, triangle_case):
        chron = synthesize_chronics(triangle_case, steps=1, seed=0)
        assert chron.steps == 1
        total_gen = sum(chron.gen_row(0).values())
        total_load = sum(chron.load_row(0).values())
        assert total_gen == pytest.approx(total_load, rel=0.02)

    def test_schedules_respect_limits(self, ieee14_case):
        chron = synthesize_chronics(ieee14_case, steps=288, seed=1)
        for t in range(chron.steps):
            for gen_id, p in chron.gen_row(t).items():
                g = ieee14_case.generator(gen_id)
                assert g.p_min - 1e-9 <= p <= g.p_max + 1e-9
            assert all(v >= 0 for v in chron.load_row(t).values())

    def test_infeasible_profile(self, triangle_case):
        total = sum(g.p_max for g in triangle_case.generators)
        with pytest.raises(InfeasibleProfile):
            synthesize_chronics(
                triangle_case, steps=5, seed=0,
                profile=SynthProfile(peak_total_mw=total * 1.2),
            )

    def test_steps_must_be_positive(self, triangle_case):
        with pytest.raises(ValueError):
            synthesize_chronics(triangle_case, steps=0, seed=0)
