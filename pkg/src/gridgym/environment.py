"""Episodic grid-operation environment.

Each step: the agent's action is legality-checked (illegal actions become
do-nothing, flagged in info), topology and redispatch are applied, the
next chronics row is loaded, the DC flow is solved, hard overloads cascade,
overload timers advance and expire lines, reward and termination are
evaluated, and cooldowns tick down.

One environment instance is single-writer: step() mutates and must be
externally serialized. simulate() and n1_screen() are read-only.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .chronics import Chronics
from .errors import ChronicsMismatch, EpisodeFinished
from .grid_model import (
    BUSBARS,
    GridCase,
    Topology,
    TopologyDelta,
    apply_topology_delta,
    default_topology,
    load_ref,
    reduce_to_buses,
    topology_from_dict,
    topology_to_dict,
)
from .powerflow import DcSolver, FlowSolution, InjectionSet

TERM_NONE = "none"
TERM_BLACKOUT = "blackout"
TERM_ISLANDED = "islanded_load"
TERM_EXHAUSTED = "chronics_exhausted"
FAILURE_TERMINATIONS = (TERM_BLACKOUT, TERM_ISLANDED)


@dataclass(frozen=True)
class RewardConfig:
    """Discount factor and per-step reward formula selector."""

    gamma: float = 1.0
    formula: str = "margin"

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class EnvConfig:
    """Operating thresholds. Every constant here is overridable via file."""

    max_overload_steps: int = 2        # steps a line may sit at rho >= 1
    hard_overload_rho: float = 1.5     # instant-disconnect threshold
    blackout_fraction: float = 0.9     # served/demanded floor
    line_cooldown_steps: int = 3
    substation_cooldown_steps: int = 3
    step_minutes: int | None = None    # None: take the chronics value
    reward: RewardConfig = field(default_factory=RewardConfig)

    def to_dict(self) -> dict:
        return {
            "max_overload_steps": self.max_overload_steps,
            "hard_overload_rho": self.hard_overload_rho,
            "blackout_fraction": self.blackout_fraction,
            "line_cooldown_steps": self.line_cooldown_steps,
            "substation_cooldown_steps": self.substation_cooldown_steps,
            "step_minutes": self.step_minutes,
            "gamma": self.reward.gamma,
            "reward_formula": self.reward.formula,
        }

    @staticmethod
    def from_dict(doc: dict) -> "EnvConfig":
        base = EnvConfig()
        reward = RewardConfig(
            gamma=float(doc.get("gamma", base.reward.gamma)),
            formula=str(doc.get("reward_formula", base.reward.formula)),
        )
        step_minutes = doc.get("step_minutes", base.step_minutes)
        return EnvConfig(
            max_overload_steps=int(doc.get("max_overload_steps", base.max_overload_steps)),
            hard_overload_rho=float(doc.get("hard_overload_rho", base.hard_overload_rho)),
            blackout_fraction=float(doc.get("blackout_fraction", base.blackout_fraction)),
            line_cooldown_steps=int(doc.get("line_cooldown_steps", base.line_cooldown_steps)),
            substation_cooldown_steps=int(doc.get("substation_cooldown_steps", base.substation_cooldown_steps)),
            step_minutes=int(step_minutes) if step_minutes is not None else None,
            reward=reward,
        )


@dataclass(frozen=True)
class Action:
    """Composite command; an empty Action is the legal do-nothing.

    set_busbars groups moves by substation: {substation: {element_ref: busbar}}.
    redispatch carries per-generator deltas in MW for this step; deltas
    accumulate across steps into a standing offset on the schedule.
    """

    set_line_status: dict[str, bool] = field(default_factory=dict)
    set_busbars: dict[str, dict[str, int]] = field(default_factory=dict)
    redispatch: dict[str, float] = field(default_factory=dict)

    def is_do_nothing(self) -> bool:
        return not self.set_line_status and not self.set_busbars and not self.redispatch

    def touched_count(self) -> int:
        return len(self.set_line_status) + sum(len(m) for m in self.set_busbars.values()) + len(self.redispatch)


def action_to_dict(action: Action) -> dict:
    return {
        "set_line_status": {k: bool(v) for k, v in action.set_line_status.items()},
        "set_busbars": {s: {r: int(b) for r, b in m.items()} for s, m in action.set_busbars.items()},
        "redispatch": {k: float(v) for k, v in action.redispatch.items()},
    }


def action_from_dict(doc: dict) -> Action:
    return Action(
        set_line_status={str(k): bool(v) for k, v in doc.get("set_line_status", {}).items()},
        set_busbars={
            str(s): {str(r): int(b) for r, b in m.items()}
            for s, m in doc.get("set_busbars", {}).items()
        },
        redispatch={str(k): float(v) for k, v in doc.get("redispatch", {}).items()},
    )


@dataclass(frozen=True)
class Observation:
    """Agent-visible snapshot after one step (or reset)."""

    timestep: int
    timestamp: str
    injections: InjectionSet
    flows: dict[str, float]
    rho: dict[str, float]
    topology: Topology
    overload_timer: dict[str, int]
    line_cooldown: dict[str, int]
    substation_cooldown: dict[str, int]
    redispatch: dict[str, float]
    forecast: dict | None  # {"load_p": {...}, "gen_p": {...}} for the next step

    @property
    def max_rho(self) -> float:
        return max(self.rho.values(), default=0.0)


def observation_to_dict(obs: Observation) -> dict:
    return {
        "timestep": obs.timestep,
        "timestamp": obs.timestamp,
        "injections": {"gen_p": dict(obs.injections.gen_p), "load_p": dict(obs.injections.load_p)},
        "flows": dict(obs.flows),
        "rho": dict(obs.rho),
        "topology": topology_to_dict(obs.topology),
        "overload_timer": dict(obs.overload_timer),
        "line_cooldown": dict(obs.line_cooldown),
        "substation_cooldown": dict(obs.substation_cooldown),
        "redispatch": dict(obs.redispatch),
        "forecast": None if obs.forecast is None else {
            "load_p": dict(obs.forecast["load_p"]),
            "gen_p": dict(obs.forecast["gen_p"]),
        },
    }


def observation_from_dict(doc: dict) -> Observation:
    return Observation(
        timestep=int(doc["timestep"]),
        timestamp=str(doc["timestamp"]),
        injections=InjectionSet(
            gen_p={k: float(v) for k, v in doc["injections"]["gen_p"].items()},
            load_p={k: float(v) for k, v in doc["injections"]["load_p"].items()},
        ),
        flows={k: float(v) for k, v in doc["flows"].items()},
        rho={k: float(v) for k, v in doc["rho"].items()},
        topology=topology_from_dict(doc["topology"]),
        overload_timer={k: int(v) for k, v in doc["overload_timer"].items()},
        line_cooldown={k: int(v) for k, v in doc["line_cooldown"].items()},
        substation_cooldown={k: int(v) for k, v in doc["substation_cooldown"].items()},
        redispatch={k: float(v) for k, v in doc["redispatch"].items()},
        forecast=None if doc["forecast"] is None else {
            "load_p": {k: float(v) for k, v in doc["forecast"]["load_p"].items()},
            "gen_p": {k: float(v) for k, v in doc["forecast"]["gen_p"].items()},
        },
    )


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    termination: str
    info: dict


def margin_reward(rho: dict[str, float], line_count: int) -> float:
    """Quadratic margin reward in [0, 1].

    r = sum over in-service lines of max(0, 1 - rho^2), divided by the
    total line count; out-of-service lines contribute nothing.
    """
    if line_count <= 0:
        return 0.0
    return sum(max(0.0, 1.0 - r * r) for r in rho.values()) / line_count


def check_legal(case: GridCase, obs: Observation, action: Action) -> str | None:
    """Returns None when legal, else a reason string.

    Illegal: busbar changes spanning more than one substation, touching any
    element still in cooldown, redispatch beyond ramp or capability limits,
    or redispatch targeting the slack generator. Unknown ids are illegal
    rather than errors so policies cannot crash the episode.
    """
    touched_subs = [s for s, moves in action.set_busbars.items() if moves]
    if len(touched_subs) > 1:
        return f"busbar changes at multiple substations: {sorted(touched_subs)}"

    for sub, moves in action.set_busbars.items():
        try:
            case.substation(sub)
        except KeyError:
            return f"unknown substation {sub!r}"
        for ref, busbar in moves.items():
            if busbar not in BUSBARS:
                return f"busbar must be 1 or 2, got {busbar!r}"
            try:
                actual = case.substation_of_ref(ref)
            except KeyError:
                return f"unknown element {ref!r}"
            if actual != sub:
                return f"element {ref!r} is at substation {actual!r}, not {sub!r}"
        if moves and obs.substation_cooldown.get(sub, 0) > 0:
            return f"substation {sub!r} in cooldown ({obs.substation_cooldown[sub]} steps left)"

    for line_id in action.set_line_status:
        if not case.has_line(line_id):
            return f"unknown line {line_id!r}"
        if obs.line_cooldown.get(line_id, 0) > 0:
            return f"line {line_id!r} in cooldown ({obs.line_cooldown[line_id]} steps left)"

    slack_id = case.slack_generator.id
    for gen_id, delta in action.redispatch.items():
        try:
            g = case.generator(gen_id)
        except KeyError:
            return f"unknown generator {gen_id!r}"
        if gen_id == slack_id:
            return "redispatch targets the slack generator"
        if abs(delta) > g.ramp + 1e-9:
            return f"generator {gen_id!r}: |{delta}| MW exceeds ramp {g.ramp} MW"
        if obs.forecast is not None:
            target = obs.forecast["gen_p"][gen_id] + obs.redispatch.get(gen_id, 0.0) + delta
            if target < g.p_min - 1e-9 or target > g.p_max + 1e-9:
                return (
                    f"generator {gen_id!r}: target {target:.3f} MW outside "
                    f"[{g.p_min}, {g.p_max}]"
                )
    return None


@dataclass
class _EnvState:
    topology: Topology
    t: int
    timers: dict[str, int]
    line_cd: dict[str, int]
    sub_cd: dict[str, int]
    redisp: dict[str, float]
    done: bool
    termination: str
    obs: Observation


class GridEnv:
    """One playable episode over (case, chronics, config, seed).

    step() mutates; simulate() runs the identical pipeline on a copied
    state and never mutates; n1_screen() is read-only. Multiple
    independent environments may run in parallel.
    """

    def __init__(
        self,
        case: GridCase,
        chronics: Chronics,
        config: EnvConfig | None = None,
        seed: int = 0,
    ):
        self.case = case
        self.chronics = chronics
        self.config = config or EnvConfig()
        self.seed = seed
        self.step_minutes = (
            self.config.step_minutes
            if self.config.step_minutes is not None
            else chronics.step_minutes
        )
        self._state: _EnvState | None = None
        self._solver_cache: dict[tuple, DcSolver] = {}

    # -- lifecycle ---------------------------------------------------------

    def reset(self) -> Observation:
        case = self.case
        if set(self.chronics.load_ids) != {d.id for d in case.loads}:
            raise ChronicsMismatch(
                f"chronics loads {sorted(self.chronics.load_ids)} do not match "
                f"case loads {sorted(d.id for d in case.loads)}"
            )
        if set(self.chronics.gen_ids) != {g.id for g in case.generators}:
            raise ChronicsMismatch(
                f"chronics generators {sorted(self.chronics.gen_ids)} do not match "
                f"case generators {sorted(g.id for g in case.generators)}"
            )
        if self.chronics.steps < 1:
            raise ChronicsMismatch("chronics cover no steps")

        topo = default_topology(case)
        inj = InjectionSet(gen_p=self.chronics.gen_row(0), load_p=self.chronics.load_row(0))
        model, sol = self._solve(topo, inj)
        applied = self._applied_injections(inj, sol)
        timers = {l.id: 0 for l in case.lines}
        line_cd = {l.id: 0 for l in case.lines}
        sub_cd = {s.id: 0 for s in case.substations}
        done = self.chronics.steps == 1
        obs = self._make_observation(
            0, applied, sol, topo, timers, line_cd, sub_cd, {}, None if done else self._forecast(0)
        )
        self._state = _EnvState(
            topology=topo,
            t=0,
            timers=timers,
            line_cd=line_cd,
            sub_cd=sub_cd,
            redisp={},
            done=done,
            termination=TERM_EXHAUSTED if done else TERM_NONE,
            obs=obs,
        )
        return obs

    @property
    def observation(self) -> Observation:
        self._require_reset()
        return self._state.obs

    @property
    def done(self) -> bool:
        self._require_reset()
        return self._state.done

    @property
    def termination(self) -> str:
        self._require_reset()
        return self._state.termination

    @property
    def t(self) -> int:
        self._require_reset()
        return self._state.t

    def _require_reset(self):
        if self._state is None:
            raise EpisodeFinished("environment not reset")

    # -- stepping ----------------------------------------------------------

    def step(self, action: Action) -> StepResult:
        self._require_reset()
        return self._advance(self._state, action)

    def simulate(self, action: Action) -> StepResult:
        """What-if step on a copied state; the live state never changes."""
        self._require_reset()
        shadow = copy.deepcopy(self._state)
        return self._advance(shadow, action)

    def n1_screen(self) -> list[dict]:
        """Single-line-outage screen at the current operating point.

        For each in-service line, re-solve with it out (no timers, no
        cascade) and report the worst post-contingency loading and whether
        any load would land in an unserved island.
        """
        self._require_reset()
        state = self._state
        inj = state.obs.injections
        reports = []
        for line in self.case.lines:
            if not state.topology.line_status[line.id]:
                continue
            contingency = state.topology.with_line_status(line.id, False)
            model, sol = self._solve(contingency, inj)
            reports.append(
                {
                    "line": line.id,
                    "max_rho": sol.max_rho(),
                    "unserved_load": self._any_unserved_load(model, sol),
                }
            )
        return reports

    # -- pipeline ----------------------------------------------------------

    def _advance(self, state: _EnvState, action: Action) -> StepResult:
        if state.done:
            raise EpisodeFinished(f"episode ended with {state.termination!r}")
        case, cfg = self.case, self.config

        illegal_reason = check_legal(case, state.obs, action)
        applied = Action() if illegal_reason else action

        # apply topology delta and redispatch
        topo = state.topology
        changed_lines: set[str] = set()
        changed_subs: set[str] = set()
        if applied.set_line_status:
            for line_id, status in applied.set_line_status.items():
                if topo.line_status[line_id] != bool(status):
                    changed_lines.add(line_id)
            topo = apply_topology_delta(
                topo, TopologyDelta(line_status=dict(applied.set_line_status))
            )
        for sub, moves in applied.set_busbars.items():
            changes = {ref: bb for ref, bb in moves.items() if topo.busbar_of[ref] != bb}
            if changes:
                changed_subs.add(sub)
                topo = apply_topology_delta(
                    topo, TopologyDelta(busbars=changes, substation=sub)
                )
        redisp = dict(state.redisp)
        for gen_id, delta in applied.redispatch.items():
            redisp[gen_id] = redisp.get(gen_id, 0.0) + float(delta)

        # next chronics row, redispatch offsets folded in
        t_next = state.t + 1
        load_p = self.chronics.load_row(t_next)
        sched = self.chronics.gen_row(t_next)
        slack_id = case.slack_generator.id
        gen_p = {}
        for g in case.generators:
            p = sched[g.id]
            if g.id != slack_id and g.id in redisp:
                p = min(max(p + redisp[g.id], g.p_min), g.p_max)
            gen_p[g.id] = p
        inj = InjectionSet(gen_p=gen_p, load_p=load_p)

        # solve; run hard-overload cascade waves; expire overload timers.
        # Timer expiries force a re-solve and may trigger further waves.
        trace: list[dict] = []
        wave = 0
        while True:
            model, sol = self._solve(topo, inj)
            while True:
                trips = sorted(
                    l for l, r in sol.rho.items() if r >= cfg.hard_overload_rho
                )
                if not trips:
                    break
                wave += 1
                for line_id in trips:
                    trace.append(
                        {"wave": wave, "line": line_id, "rho": sol.rho[line_id], "reason": "hard_overload"}
                    )
                    topo = topo.with_line_status(line_id, False)
                    changed_lines.add(line_id)
                model, sol = self._solve(topo, inj)
            expired = sorted(
                l for l, r in sol.rho.items()
                if r >= 1.0 and state.timers.get(l, 0) + 1 > cfg.max_overload_steps
            )
            if not expired:
                break
            wave += 1
            for line_id in expired:
                trace.append(
                    {"wave": wave, "line": line_id, "rho": sol.rho[line_id], "reason": "overload_timer"}
                )
                topo = topo.with_line_status(line_id, False)
                changed_lines.add(line_id)

        # consecutive-overload timers against the step's final loadings
        timers = {}
        for line in case.lines:
            in_service = topo.line_status[line.id]
            if in_service and sol.rho.get(line.id, 0.0) >= 1.0:
                timers[line.id] = state.timers.get(line.id, 0) + 1
            else:
                timers[line.id] = 0

        applied_inj = self._applied_injections(inj, sol)
        slack_out = sol.slack_p.get(slack_id)
        slack_infeasible = slack_out is not None and (
            slack_out < case.slack_generator.p_min - 1e-9
            or slack_out > case.slack_generator.p_max + 1e-9
        )

        # termination, then reward (zeroed at any failure)
        served, total = self._served_load(model, sol, inj)
        if total > 0 and served < cfg.blackout_fraction * total:
            termination = TERM_BLACKOUT
        elif self._any_unserved_load(model, sol):
            termination = TERM_ISLANDED
        elif t_next >= self.chronics.steps - 1:
            termination = TERM_EXHAUSTED
        else:
            termination = TERM_NONE

        if termination in FAILURE_TERMINATIONS or slack_infeasible:
            reward = 0.0
        else:
            reward = margin_reward(sol.rho, len(case.lines))

        # cooldowns: tick down, then arm the elements changed this step
        line_cd = {l: max(0, v - 1) for l, v in state.line_cd.items()}
        sub_cd = {s: max(0, v - 1) for s, v in state.sub_cd.items()}
        for line_id in changed_lines:
            line_cd[line_id] = max(line_cd.get(line_id, 0), cfg.line_cooldown_steps)
        for sub in changed_subs:
            sub_cd[sub] = max(sub_cd.get(sub, 0), cfg.substation_cooldown_steps)

        done = termination != TERM_NONE
        obs = self._make_observation(
            t_next, applied_inj, sol, topo, timers, line_cd, sub_cd, redisp,
            None if done else self._forecast(t_next),
        )

        state.topology = topo
        state.t = t_next
        state.timers = timers
        state.line_cd = line_cd
        state.sub_cd = sub_cd
        state.redisp = redisp
        state.done = done
        state.termination = termination
        state.obs = obs

        info = {
            "cascade_trace": trace,
            "illegal_reason": illegal_reason,
            "applied_action": action_to_dict(applied),
            "slack_infeasible": slack_infeasible,
        }
        return StepResult(observation=obs, reward=reward, done=done, termination=termination, info=info)

    # -- helpers -----------------------------------------------------------

    def _solve(self, topo: Topology, inj: InjectionSet):
        key = (
            tuple(sorted(topo.line_status.items())),
            tuple(sorted(topo.busbar_of.items())),
        )
        solver = self._solver_cache.get(key)
        if solver is None:
            solver = DcSolver(reduce_to_buses(self.case, topo))
            if len(self._solver_cache) >= 128:
                self._solver_cache.clear()
            self._solver_cache[key] = solver
        return solver.model, solver.solve(inj)

    def _applied_injections(self, inj: InjectionSet, sol: FlowSolution) -> InjectionSet:
        """Replace island-slack schedules with their balancing output.

        The global slack is reported clipped to its limits; an out-of-range
        requirement is flagged as infeasible rather than hidden.
        """
        case = self.case
        gen_p = dict(inj.gen_p)
        for gen_id, out in sol.slack_p.items():
            g = case.generator(gen_id)
            if g.slack:
                gen_p[gen_id] = min(max(out, g.p_min), g.p_max)
            else:
                gen_p[gen_id] = out
        return InjectionSet(gen_p=gen_p, load_p=dict(inj.load_p))

    def _served_load(self, model, sol: FlowSolution, inj: InjectionSet) -> tuple[float, float]:
        served = 0.0
        total = 0.0
        for d in self.case.loads:
            p = inj.load_p[d.id]
            total += p
            bus = model.bus_of_element[load_ref(d.id)]
            if sol.island_served[model.island_of_bus(bus)]:
                served += p
        return served, total

    def _any_unserved_load(self, model, sol: FlowSolution) -> bool:
        for d in self.case.loads:
            bus = model.bus_of_element[load_ref(d.id)]
            if not sol.island_served[model.island_of_bus(bus)]:
                return True
        return False

    def _forecast(self, t: int) -> dict | None:
        if t + 1 >= self.chronics.steps:
            return None
        return {
            "load_p": self.chronics.load_row(t + 1),
            "gen_p": self.chronics.gen_row(t + 1),
        }

    def _make_observation(
        self, t, inj, sol, topo, timers, line_cd, sub_cd, redisp, forecast
    ) -> Observation:
        start = datetime.fromisoformat(self.chronics.start)
        stamp = (start + timedelta(minutes=t * self.step_minutes)).isoformat()
        return Observation(
            timestep=t,
            timestamp=stamp,
            injections=inj,
            flows=dict(sol.line_flow),
            rho=dict(sol.rho),
            topology=topo,
            overload_timer=dict(timers),
            line_cooldown=dict(line_cd),
            substation_cooldown=dict(sub_cd),
            redispatch=dict(redisp),
            forecast=forecast,
        )


def run_cascade(
    case: GridCase,
    topo: Topology,
    inj: InjectionSet,
    hard_overload_rho: float = 1.5,
):
    """Standalone cascade: trip every line at or above the hard threshold,
    re-reduce and re-solve, repeat to a fixed point.

    Returns (final topology, final bus model, final solution, trace).
    Terminates in at most L waves: each wave strictly removes lines.
    """
    trace: list[dict] = []
    wave = 0
    while True:
        model = reduce_to_buses(case, topo)
        sol = DcSolver(model).solve(inj)
        trips = sorted(l for l, r in sol.rho.items() if r >= hard_overload_rho)
        if not trips:
            return topo, model, sol, trace
        wave += 1
        for line_id in trips:
            trace.append(
                {"wave": wave, "line": line_id, "rho": sol.rho[line_id], "reason": "hard_overload"}
            )
            topo = topo.with_line_status(line_id, False)


def episode_score(log, cfg: RewardConfig) -> float:
    """Final game score of a completed episode log.

    An episode ending in blackout or islanded load scores exactly zero;
    otherwise the score is the discounted reward sum over its steps.
    """
    if log.termination in FAILURE_TERMINATIONS:
        return 0.0
    score = 0.0
    for i, rec in enumerate(log.steps):
        score += (cfg.gamma ** i) * float(rec["reward"])
    return score
