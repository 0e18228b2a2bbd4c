"""Baseline policies and the episode runner.

A policy is a callable (observation, env) -> Action; the env argument
gives lookahead policies access to simulate(). Every emitted action is
pre-checked for legality, so replays never hit the illegal-action path.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from pathlib import Path

from .chronics import Chronics
from .environment import (
    Action,
    EnvConfig,
    FAILURE_TERMINATIONS,
    GridEnv,
    RewardConfig,
    action_to_dict,
    check_legal,
    episode_score,
)
from .grid_model import GridCase
from .log_io import EpisodeLog, canonical_json, config_hash


def do_nothing_policy(obs, env=None) -> Action:
    """The canonical baseline: always the empty action."""
    return Action()


@dataclass
class GreedyTopologyPolicy:
    """One-step lookahead over line toggles and single-substation splits.

    Sleeps while max loading stays under activation_rho. When active, it
    simulates every candidate and commits the legal one with the best
    simulated reward; ties break on fewer elements touched, then lowest
    candidate id. Falls back to do-nothing if every candidate simulates
    to failure.

    Substations with more than max_enum_elements connectable elements
    enumerate only single-element moves, keeping the candidate count
    polynomial instead of 2^(n-1).
    """

    activation_rho: float = 0.9
    max_enum_elements: int = 6

    def __call__(self, obs, env: GridEnv) -> Action:
        if obs.max_rho < self.activation_rho:
            return Action()

        best = None  # (-reward, touched, candidate_id, action)
        for cand_id, action in self.candidates(env.case, obs):
            if check_legal(env.case, obs, action) is not None:
                continue
            result = env.simulate(action)
            if result.termination in FAILURE_TERMINATIONS:
                continue
            key = (-result.reward, action.touched_count(), cand_id)
            if best is None or key < best[0]:
                best = (key, action)
        if best is None:
            return Action()
        return best[1]

    def candidates(self, case: GridCase, obs) -> list[tuple[str, Action]]:
        """Candidate actions in deterministic order, including do-nothing."""
        out: list[tuple[str, Action]] = [("", Action())]
        for line in case.lines:
            status = obs.topology.line_status[line.id]
            out.append((f"line:{line.id}", Action(set_line_status={line.id: not status})))
        for sub in case.substations:
            refs = case.refs_of_substation(sub.id)
            if len(refs) < 2:
                continue
            current = {r: obs.topology.busbar_of[r] for r in refs}
            for pattern_id, assignment in self._assignments(refs, current):
                moves = {r: b for r, b in assignment.items() if current[r] != b}
                if not moves:
                    continue
                out.append((f"sub:{sub.id}:{pattern_id}", Action(set_busbars={sub.id: moves})))
        return out

    def _assignments(self, refs, current):
        if len(refs) <= self.max_enum_elements:
            # All splits with the first element pinned to busbar 1 (the
            # mirrored assignment is electrically identical).
            for bits in product((1, 2), repeat=len(refs) - 1):
                assignment = {refs[0]: 1}
                assignment.update(dict(zip(refs[1:], bits)))
                pattern = "1" + "".join(str(b) for b in bits)
                yield pattern, assignment
        else:
            for ref in refs:
                flipped = dict(current)
                flipped[ref] = 2 if current[ref] == 1 else 1
                yield f"move-{ref}", flipped


AGENTS = {
    "do_nothing": lambda: do_nothing_policy,
    "greedy": GreedyTopologyPolicy,
}


def make_agent(name: str):
    try:
        return AGENTS[name]()
    except KeyError:
        raise ValueError(f"unknown agent {name!r}; available: {', '.join(sorted(AGENTS))}")


def run_episode(
    agent,
    case: GridCase,
    chronics: Chronics,
    seed: int = 0,
    config: EnvConfig | None = None,
    case_path: str | Path | None = None,
    chronics_path: str | Path | None = None,
    agent_name: str = "",
) -> EpisodeLog:
    """Play one full episode and return its deterministic log."""
    config = config or EnvConfig()
    env = GridEnv(case, chronics, config=config, seed=seed)
    obs = env.reset()

    header = {
        "type": "header",
        "format": "gridgym-episode-v1",
        "case_id": case.id,
        "case_path": str(case_path) if case_path else None,
        "chronics_id": Path(chronics_path).name if chronics_path else "inline",
        "chronics_path": str(chronics_path) if chronics_path else None,
        "agent": agent_name,
        "seed": seed,
        "config": config.to_dict(),
        "config_hash": episode_config_hash(config, case, chronics),
    }
    log = EpisodeLog(header=header, steps=[])

    while not env.done:
        action = agent(obs, env)
        if check_legal(case, obs, action) is not None:
            action = Action()
        result = env.step(action)
        obs = result.observation
        log.steps.append(step_record(env.t, action, result))

    log.end = {
        "type": "end",
        "termination": env.termination,
        "steps": len(log.steps),
        "score": 0.0,
    }
    log.end["score"] = episode_score(log, config.reward)
    return log


def step_record(t: int, action: Action, result) -> dict:
    obs = result.observation
    return {
        "type": "step",
        "t": t,
        "action": action_to_dict(action),
        "applied_action": result.info["applied_action"],
        "illegal_reason": result.info["illegal_reason"],
        "injections": {
            "gen_p": dict(obs.injections.gen_p),
            "load_p": dict(obs.injections.load_p),
        },
        "rho": dict(obs.rho),
        "reward": result.reward,
        "overload_timer": dict(obs.overload_timer),
        "cascade": result.info["cascade_trace"],
        "slack_infeasible": result.info["slack_infeasible"],
        "termination": result.termination,
    }


def episode_config_hash(config: EnvConfig, case: GridCase, chronics: Chronics) -> str:
    from .grid_model import case_to_dict

    case_text = canonical_json(case_to_dict(case))
    chron_text = canonical_json(
        {
            "step_minutes": chronics.step_minutes,
            "start": chronics.start,
            "load_ids": list(chronics.load_ids),
            "gen_ids": list(chronics.gen_ids),
            "load_p": [list(r) for r in chronics.load_p],
            "gen_p": [list(r) for r in chronics.gen_p],
        }
    )
    return config_hash(config.to_dict(), case_text, [chron_text])
