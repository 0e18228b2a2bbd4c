import json
from pathlib import Path

import pytest

from gridgym.cli import main
from gridgym.log_io import read_log

CASES = Path(__file__).resolve().parents[1] / "cases"
CHRONICS = Path(__file__).resolve().parents[1] / "chronics"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture()
def stress_log(tmp_path):
    out = tmp_path / "dn.jsonl"
    code = run_cli(
        "run", "--case", CASES / "fig5_5sub.json", "--chronics", CHRONICS / "fig5_stress",
        "--agent", "do_nothing", "--seed", "0", "--out", out,
    )
    assert code == 0
    return out


class TestRun:
    def test_run_writes_log_and_exits_zero(self, stress_log):
        log = read_log(stress_log)
        assert log.header["case_id"] == "fig5_5sub"
        assert log.end is not None
        # a game-over episode still exits 0: the run completed
        assert log.termination == "blackout"

    def test_missing_case_names_path(self, tmp_path, capsys):
        code = run_cli(
            "run", "--case", tmp_path / "ghost.json", "--chronics", CHRONICS / "fig5_stress",
            "--agent", "do_nothing", "--out", tmp_path / "x.jsonl",
        )
        assert code == 3
        assert "ghost.json" in capsys.readouterr().err

    def test_unknown_agent_lists_available(self, tmp_path, capsys):
        code = run_cli(
            "run", "--case", CASES / "fig5_5sub.json", "--chronics", CHRONICS / "fig5_stress",
            "--agent", "alphazero", "--out", tmp_path / "x.jsonl",
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "do_nothing" in err and "greedy" in err

    def test_mismatched_chronics_fail_cleanly(self, tmp_path, capsys):
        code = run_cli(
            "run", "--case", CASES / "triangle3.json", "--chronics", CHRONICS / "fig5_stress",
            "--agent", "do_nothing", "--out", tmp_path / "x.jsonl",
        )
        assert code == 3
        assert "match" in capsys.readouterr().err

    def test_debug_dump_contents(self, tmp_path):
        dump = tmp_path / "dump.json"
        out = tmp_path / "x.jsonl"
        code = run_cli(
            "run", "--case", CASES / "ieee14.json", "--chronics", CHRONICS / "ieee14_day0",
            "--agent", "do_nothing", "--out", out, "--debug-dump", dump,
        )
        assert code == 0
        doc = json.loads(dump.read_text())
        island = doc["islands"][0]
        assert len(island["bprime"]) == 13  # 14 buses minus the slack
        assert len(doc["line_flow"]) == 20


class TestReplay:
    def test_fresh_log_verifies(self, stress_log):
        assert run_cli("replay", "--log", stress_log, "--verify") == 0

    def test_tampered_reward_diverges(self, stress_log, tmp_path, capsys):
        lines = stress_log.read_text().splitlines()
        rec = json.loads(lines[3])
        assert rec["type"] == "step"
        rec["reward"] = rec["reward"] + 0.25
        lines[3] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
        tampered = tmp_path / "tampered.jsonl"
        tampered.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", "--log", tampered, "--verify") == 4
        assert "divergence" in capsys.readouterr().err

    def test_one_bit_flip_diverges(self, stress_log, tmp_path):
        text = stress_log.read_text()
        # flip one digit inside a step record's rho value
        idx = text.index('"rho":{') + len('"rho":{') + 12
        while not text[idx].isdigit():
            idx += 1
        flipped = text[:idx] + ("1" if text[idx] != "1" else "2") + text[idx + 1:]
        assert flipped != text
        bad = tmp_path / "flipped.jsonl"
        bad.write_text(flipped)
        assert run_cli("replay", "--log", bad, "--verify") == 4

    def test_config_hash_mismatch_refused(self, stress_log, tmp_path, capsys):
        lines = stress_log.read_text().splitlines()
        header = json.loads(lines[0])
        header["config_hash"] = "0" * 16
        lines[0] = json.dumps(header, sort_keys=True, separators=(",", ":"))
        other = tmp_path / "other.jsonl"
        other.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", "--log", other) == 2
        assert "config hash" in capsys.readouterr().err

    def test_missing_log(self, tmp_path):
        assert run_cli("replay", "--log", tmp_path / "none.jsonl") == 3


class TestScore:
    def test_two_logs_plus_aggregate(self, stress_log, tmp_path, capsys):
        out2 = tmp_path / "greedy.jsonl"
        run_cli(
            "run", "--case", CASES / "fig5_5sub.json", "--chronics", CHRONICS / "fig5_stress",
            "--agent", "greedy", "--seed", "0", "--out", out2,
        )
        capsys.readouterr()  # drop the run's own status line
        code = run_cli("score", "--logs", stress_log, out2)
        assert code == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert len(rows) == 4  # header + 2 episodes + aggregate
        assert rows[0].startswith("log,")
        assert rows[-1].startswith("aggregate")

    def test_failure_row_scores_zero(self, stress_log, capsys):
        assert run_cli("score", "--logs", stress_log) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        fields = rows[1].split(",")
        assert fields[6] == "blackout"
        assert float(fields[7]) == 0.0

    def test_empty_glob(self, tmp_path):
        assert run_cli("score", "--logs", str(tmp_path / "*.jsonl")) == 3


class TestValidateAndSynth:
    def test_validate_ok(self, capsys):
        assert run_cli("validate-case", "--case", CASES / "ieee14.json") == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_reports_violations(self, tmp_path, capsys):
        doc = json.loads((CASES / "triangle3.json").read_text())
        doc["lines"][0]["x_pu"] = 0.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli("validate-case", "--case", bad) == 1
        assert "reactance" in capsys.readouterr().out

    def test_synth_chronics_round_trip(self, tmp_path):
        out = tmp_path / "ep"
        code = run_cli(
            "synth-chronics", "--case", CASES / "ieee14.json",
            "--steps", "24", "--seed", "7", "--out", out,
        )
        assert code == 0
        from gridgym import load_chronics

        assert load_chronics(out).steps == 24

    def test_config_override_via_file(self, stress_log, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"max_overload_steps": 0}))
        out = tmp_path / "strict.jsonl"
        code = run_cli(
            "run", "--case", CASES / "fig5_5sub.json", "--chronics", CHRONICS / "fig5_stress",
            "--agent", "do_nothing", "--out", out, "--config", cfg,
        )
        assert code == 0
        strict = read_log(out)
        default = read_log(stress_log)
        # zero tolerated overload steps ends the episode sooner
        assert len(strict.steps) < len(default.steps)
