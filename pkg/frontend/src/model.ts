// Console view model and its pure update functions. The console is
// stateless with respect to physics: everything shown is derived from
// server payloads, so reloading and resubscribing reproduces the view.

import type {
  ActionDoc,
  CaseDoc,
  CascadeEvent,
  ObservationDoc,
  SessionCreated,
  StepPayload,
  Termination,
} from "./protocol.js";
import { ActionDraft, emptyDraft, maxRho } from "./protocol.js";

export interface Alarm {
  line: string;
  rho: number;
  timer: number;
}

export interface TimelineEntry {
  t: number;
  reward: number;
  scoreSoFar: number;
  action: Required<ActionDoc>;
  termination: Termination;
  illegalReason: string | null;
  cascade: CascadeEvent[];
}

export interface SimPanel {
  action: ActionDoc;
  predictedMaxRho: number;
  rewardDelta: number;
  predictedTermination: Termination;
  gameOverWarning: boolean;
  cascade: CascadeEvent[];
}

export interface GameOver {
  termination: Termination;
  finalScore: number;
  cascade: CascadeEvent[];
}

export interface ConsoleModel {
  session: string;
  clientId: string;
  authority: string;
  episode: string;
  caseDoc: CaseDoc;
  maxOverloadSteps: number;
  observation: ObservationDoc;
  done: boolean;
  termination: Termination;
  scoreSoFar: number;
  draft: ActionDraft;
  sim: SimPanel | null;
  timeline: TimelineEntry[];
  alarms: Alarm[];
  banner: string | null;
  gameOver: GameOver | null;
  lastPushAt: number | null;
}

export function initialModel(created: SessionCreated, now = 0): ConsoleModel {
  const maxOverloadSteps = Number(created.config["max_overload_steps"] ?? 2);
  return {
    session: created.session,
    clientId: created.client_id,
    authority: created.authority,
    episode: created.episode,
    caseDoc: created.case,
    maxOverloadSteps,
    observation: created.observation,
    done: false,
    termination: "none",
    scoreSoFar: 0,
    draft: emptyDraft(),
    sim: null,
    timeline: [],
    alarms: alarmsFrom(created.observation),
    banner: null,
    gameOver: null,
    lastPushAt: now,
  };
}

/** Overloaded in-service lines, worst first. */
export function alarmsFrom(obs: ObservationDoc): Alarm[] {
  const alarms: Alarm[] = [];
  for (const [line, rho] of Object.entries(obs.rho)) {
    if (rho >= 1.0) {
      alarms.push({ line, rho, timer: obs.overload_timer[line] ?? 0 });
    }
  }
  alarms.sort((a, b) => b.rho - a.rho);
  return alarms;
}

/**
 * Fold a committed step into the model: diagram state, alarms, timeline,
 * and score move together (one atomic update per push), the draft clears,
 * and an illegality banner appears when the server converted the action.
 */
export function applyStep(model: ConsoleModel, payload: StepPayload, now = 0): ConsoleModel {
  const entry: TimelineEntry = {
    t: payload.t,
    reward: payload.reward,
    scoreSoFar: payload.score_so_far,
    action: payload.info.applied_action,
    termination: payload.termination,
    illegalReason: payload.info.illegal_reason,
    cascade: payload.info.cascade_trace,
  };
  const failed = payload.termination === "blackout" || payload.termination === "islanded_load";
  return {
    ...model,
    observation: payload.observation,
    done: payload.done,
    termination: payload.termination,
    scoreSoFar: payload.score_so_far,
    draft: emptyDraft(),
    sim: null,
    timeline: [...model.timeline, entry],
    alarms: alarmsFrom(payload.observation),
    banner: payload.info.illegal_reason
      ? `action converted to do-nothing: ${payload.info.illegal_reason}`
      : null,
    gameOver: payload.done
      ? {
          termination: payload.termination,
          finalScore: failed ? 0 : payload.score_so_far,
          cascade: payload.info.cascade_trace,
        }
      : null,
    lastPushAt: now,
  };
}

/**
 * Record a what-if result in the side panel. The live observation, alarms,
 * and timeline are untouched: simulation never mutates the diagram.
 */
export function applySimulation(
  model: ConsoleModel,
  action: ActionDoc,
  payload: StepPayload,
  baseline: StepPayload,
): ConsoleModel {
  const failed = payload.termination === "blackout" || payload.termination === "islanded_load";
  return {
    ...model,
    sim: {
      action,
      predictedMaxRho: maxRho(payload.observation),
      rewardDelta: payload.reward - baseline.reward,
      predictedTermination: payload.termination,
      gameOverWarning: failed,
      cascade: payload.info.cascade_trace,
    },
  };
}

export function applyAuthority(model: ConsoleModel, authority: string): ConsoleModel {
  return { ...model, authority };
}

export function holdsAuthority(model: ConsoleModel): boolean {
  return model.authority === model.clientId;
}

/** True when pushes have stopped arriving for longer than the threshold. */
export function isStale(model: ConsoleModel, now: number, thresholdMs = 60_000): boolean {
  return model.lastPushAt !== null && now - model.lastPushAt > thresholdMs;
}

export function sparklinePoints(
  timeline: TimelineEntry[],
  width: number,
  height: number,
): string {
  if (timeline.length === 0) return "";
  const n = timeline.length;
  return timeline
    .map((entry, i) => {
      const x = n === 1 ? width : (i / (n - 1)) * width;
      const y = height - entry.reward * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}
