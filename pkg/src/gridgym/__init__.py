"""gridgym: an episodic transmission-grid operation game.

DC power flow over a switchable double-busbar topology, thermal-limit and
cascading-outage rules, chronics-driven injections, baseline agents, a
deterministic scorer, and a JSON wire protocol for live operation.
"""

from .agents import GreedyTopologyPolicy, do_nothing_policy, make_agent, run_episode
from .chronics import Chronics, SynthProfile, load_chronics, synthesize_chronics, write_chronics
from .environment import (
    Action,
    EnvConfig,
    GridEnv,
    Observation,
    RewardConfig,
    StepResult,
    check_legal,
    episode_score,
    margin_reward,
    run_cascade,
)
from .grid_model import (
    BusModel,
    GridCase,
    Topology,
    TopologyDelta,
    apply_topology_delta,
    default_topology,
    load_case,
    reduce_to_buses,
    save_case,
    validate_case,
)
from .powerflow import (
    DcSolver,
    FlowSolution,
    InjectionSet,
    fundamental_cycles,
    kcl_residual,
    kvl_cycle_residual,
    loadings,
    solve_dc,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "BusModel",
    "Chronics",
    "DcSolver",
    "EnvConfig",
    "FlowSolution",
    "GreedyTopologyPolicy",
    "GridCase",
    "GridEnv",
    "InjectionSet",
    "Observation",
    "RewardConfig",
    "StepResult",
    "SynthProfile",
    "Topology",
    "TopologyDelta",
    "apply_topology_delta",
    "check_legal",
    "default_topology",
    "do_nothing_policy",
    "episode_score",
    "fundamental_cycles",
    "kcl_residual",
    "kvl_cycle_residual",
    "load_case",
    "load_chronics",
    "loadings",
    "make_agent",
    "margin_reward",
    "reduce_to_buses",
    "run_cascade",
    "run_episode",
    "save_case",
    "solve_dc",
    "synthesize_chronics",
    "validate_case",
    "write_chronics",
]
