"""Command-line entry points.

Verbs: run, replay, score, validate-case, synth-chronics, serve.

Exit codes: 0 success (a completed episode counts, even if game over),
2 bad arguments or configuration mismatch, 3 file errors, 4 replay
divergence. GRIDGYM_CONFIG may point to a JSON or TOML file overriding
the default thresholds; --config does the same and wins.
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import io
import json
import os
import sys
from pathlib import Path

from .agents import AGENTS, episode_config_hash, make_agent, run_episode, step_record
from .chronics import SynthProfile, load_chronics, synthesize_chronics, write_chronics
from .environment import (
    Action,
    EnvConfig,
    GridEnv,
    RewardConfig,
    episode_score,
)
from .environment import action_from_dict
from .errors import GridGymError
from .grid_model import default_topology, load_case, reduce_to_buses, validate_case
from .log_io import EpisodeLog, canonical_json, read_log, write_log
from .powerflow import InjectionSet, diagnostic_dump

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_DIVERGED = 4


def load_config(path: str | None) -> EnvConfig:
    """Resolve the env config: --config flag, else GRIDGYM_CONFIG, else defaults."""
    path = path or os.environ.get("GRIDGYM_CONFIG")
    if not path:
        return EnvConfig()
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text)
    else:
        doc = json.loads(text)
    return EnvConfig.from_dict(doc)


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def cmd_run(args) -> int:
    case_path = Path(args.case)
    chron_path = Path(args.chronics)
    if not case_path.exists():
        return _fail(EXIT_FILE, f"case file not found: {case_path}")
    if not chron_path.exists():
        return _fail(EXIT_FILE, f"chronics directory not found: {chron_path}")
    if args.agent not in AGENTS:
        return _fail(
            EXIT_USAGE,
            f"unknown agent {args.agent!r}; available: {', '.join(sorted(AGENTS))}",
        )
    try:
        case = load_case(case_path)
        chron = load_chronics(chron_path)
        config = load_config(args.config)
    except (GridGymError, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_FILE, f"error: {exc}")

    try:
        if args.debug_dump:
            inj = InjectionSet(gen_p=chron.gen_row(0), load_p=chron.load_row(0))
            model = reduce_to_buses(case, default_topology(case))
            Path(args.debug_dump).write_text(
                json.dumps(diagnostic_dump(model, inj), indent=2) + "\n"
            )
        log = run_episode(
            make_agent(args.agent), case, chron,
            seed=args.seed, config=config,
            case_path=case_path, chronics_path=chron_path, agent_name=args.agent,
        )
    except GridGymError as exc:
        return _fail(EXIT_FILE, f"error: {exc}")
    write_log(log, args.out)
    print(f"episode finished: termination={log.termination} steps={log.end['steps']} "
          f"score={log.score}")
    return EXIT_OK


def _replay_env(log: EpisodeLog, config: EnvConfig):
    header = log.header
    case = load_case(header["case_path"])
    chron = load_chronics(header["chronics_path"])
    current = episode_config_hash(config, case, chron)
    if current != header["config_hash"]:
        return None, None, current
    env = GridEnv(case, chron, config=config, seed=int(header["seed"]))
    return env, case, current


def cmd_replay(args) -> int:
    try:
        log = read_log(args.log)
    except GridGymError as exc:
        return _fail(EXIT_FILE, f"error: {exc}")
    header = log.header
    if not header.get("case_path") or not header.get("chronics_path"):
        return _fail(EXIT_USAGE, "log has no case/chronics paths; cannot replay")
    config = EnvConfig.from_dict(header.get("config", {}))
    try:
        env, case, current_hash = _replay_env(log, config)
    except (GridGymError, OSError) as exc:
        return _fail(EXIT_FILE, f"error: {exc}")
    if env is None:
        return _fail(
            EXIT_USAGE,
            f"config hash mismatch: log has {header['config_hash']}, "
            f"current files give {current_hash}; refusing to replay",
        )

    env.reset()
    replayed = EpisodeLog(header=dict(header), steps=[])
    for rec in log.steps:
        action = action_from_dict(rec["action"])
        result = env.step(action)
        replayed.steps.append(step_record(env.t, action, result))
        if env.done:
            break
    replayed.end = {
        "type": "end",
        "termination": env.termination,
        "steps": len(replayed.steps),
        "score": 0.0,
    }
    replayed.end["score"] = episode_score(replayed, config.reward)

    if args.verify:
        want = log.lines()
        got = replayed.lines()
        for i, (a, b) in enumerate(zip(want, got)):
            if a != b:
                return _fail(
                    EXIT_DIVERGED,
                    f"divergence at record {i} (step {i if i else 'header'}):\n"
                    f"  log:    {a[:200]}\n  replay: {b[:200]}",
                )
        if len(want) != len(got):
            return _fail(
                EXIT_DIVERGED,
                f"divergence: log has {len(want)} records, replay produced {len(got)}",
            )
        print("replay verified: bit-identical")
    else:
        print(f"replayed: termination={replayed.end['termination']} "
              f"score={replayed.end['score']}")
    return EXIT_OK


def cmd_score(args) -> int:
    paths: list[str] = []
    for pattern in args.logs:
        paths.extend(sorted(globmod.glob(pattern)))
    if not paths:
        return _fail(EXIT_FILE, f"no logs match {args.logs}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["log", "case", "chronics", "agent", "seed", "steps", "termination", "score"])
    scores = []
    for path in paths:
        try:
            log = read_log(path)
        except GridGymError as exc:
            return _fail(EXIT_FILE, f"error: {exc}")
        cfg = RewardConfig(
            gamma=float(log.header.get("config", {}).get("gamma", 1.0)),
            formula=str(log.header.get("config", {}).get("reward_formula", "margin")),
        )
        score = episode_score(log, cfg)
        scores.append(score)
        writer.writerow([
            path,
            log.header.get("case_id", ""),
            log.header.get("chronics_id", ""),
            log.header.get("agent", ""),
            log.header.get("seed", ""),
            len(log.steps),
            log.termination,
            repr(score),
        ])
    writer.writerow(["aggregate", "", "", "", "", "", "", repr(sum(scores) / len(scores))])
    sys.stdout.write(out.getvalue())
    return EXIT_OK


def cmd_validate_case(args) -> int:
    path = Path(args.case)
    if not path.exists():
        return _fail(EXIT_FILE, f"case file not found: {path}")
    try:
        case = load_case(path)
    except GridGymError as exc:
        return _fail(EXIT_FILE, f"error: {exc}")
    problems = validate_case(case)
    for p in problems:
        print(p)
    if problems:
        return 1
    print(f"{path}: ok ({len(case.substations)} substations, {len(case.lines)} lines)")
    return EXIT_OK


def cmd_synth_chronics(args) -> int:
    path = Path(args.case)
    if not path.exists():
        return _fail(EXIT_FILE, f"case file not found: {path}")
    try:
        case = load_case(path)
        profile = SynthProfile(peak_total_mw=args.peak_mw)
        chron = synthesize_chronics(case, steps=args.steps, seed=args.seed, profile=profile)
    except GridGymError as exc:
        return _fail(EXIT_USAGE, f"error: {exc}")
    write_chronics(chron, args.out)
    print(f"wrote {chron.steps} steps to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve  # deferred: aiohttp import is heavier

    try:
        return serve(args)
    except OSError as exc:
        return _fail(EXIT_FILE, f"serve failed: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridgym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play one episode with a named agent")
    p.add_argument("--case", required=True)
    p.add_argument("--chronics", required=True)
    p.add_argument("--agent", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="episode log path (JSON lines)")
    p.add_argument("--config", default=None)
    p.add_argument("--debug-dump", default=None,
                   help="write the reduced system and first solution as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-execute a logged episode")
    p.add_argument("--log", required=True)
    p.add_argument("--verify", action="store_true",
                   help="assert bit-identical per-step records")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("score", help="score one or more episode logs as CSV")
    p.add_argument("--logs", nargs="+", required=True, help="log paths or globs")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("validate-case", help="check a case file's invariants")
    p.add_argument("--case", required=True)
    p.set_defaults(func=cmd_validate_case)

    p = sub.add_parser("synth-chronics", help="generate synthetic chronics")
    p.add_argument("--case", required=True)
    p.add_argument("--steps", type=int, default=288)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--peak-mw", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_chronics)

    p = sub.add_parser("serve", help="serve the wire protocol and console")
    p.add_argument("--case", required=True)
    p.add_argument("--chronics", required=True,
                   help="an episode directory, or a directory of episodes")
    p.add_argument("--bind", default="127.0.0.1:8061", help="host:port for HTTP/WebSocket")
    p.add_argument("--tcp-bind", default=None,
                   help="host:port for newline-delimited JSON over TCP "
                        "(default: HTTP port + 1)")
    p.add_argument("--log-dir", default="logs")
    p.add_argument("--console", default=None,
                   help="static console bundle to serve (default: frontend/dist if present)")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
