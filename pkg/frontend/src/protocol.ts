// Wire protocol types and pure helpers shared by the console and its tests.
// The shapes mirror docs/protocol.md (protocol version 1) field for field.

export const PROTOCOL_VERSION = "1";

export type Busbar = 1 | 2;

export interface SubstationDoc {
  id: string;
  name: string;
  kv: number;
  pos?: [number, number];
}

export interface LineDoc {
  id: string;
  from: string;
  to: string;
  x_pu: number;
  limit_mw: number;
}

export interface GeneratorDoc {
  id: string;
  sub: string;
  p_min: number;
  p_max: number;
  ramp: number;
  slack: boolean;
}

export interface LoadDoc {
  id: string;
  sub: string;
}

export interface CaseDoc {
  id: string;
  base_mva: number;
  substations: SubstationDoc[];
  lines: LineDoc[];
  generators: GeneratorDoc[];
  loads: LoadDoc[];
}

export interface InjectionsDoc {
  gen_p: Record<string, number>;
  load_p: Record<string, number>;
}

export interface ObservationDoc {
  timestep: number;
  timestamp: string;
  injections: InjectionsDoc;
  flows: Record<string, number>;
  rho: Record<string, number>;
  topology: {
    line_status: Record<string, boolean>;
    busbar_of: Record<string, Busbar>;
  };
  overload_timer: Record<string, number>;
  line_cooldown: Record<string, number>;
  substation_cooldown: Record<string, number>;
  redispatch: Record<string, number>;
  forecast: InjectionsDoc | null;
}

export interface ActionDoc {
  set_line_status?: Record<string, boolean>;
  set_busbars?: Record<string, Record<string, Busbar>>;
  redispatch?: Record<string, number>;
}

export interface CascadeEvent {
  wave: number;
  line: string;
  rho: number;
  reason: "hard_overload" | "overload_timer";
}

export interface StepInfo {
  cascade_trace: CascadeEvent[];
  illegal_reason: string | null;
  applied_action: Required<ActionDoc>;
  slack_infeasible: boolean;
}

export type Termination = "none" | "blackout" | "islanded_load" | "chronics_exhausted";

export interface StepPayload {
  session: string;
  t: number;
  observation: ObservationDoc;
  reward: number;
  done: boolean;
  termination: Termination;
  info: StepInfo;
  score_so_far: number;
}

export interface SessionCreated {
  session: string;
  client_id: string;
  episode: string;
  seed: number;
  authority: string;
  case: CaseDoc;
  config: Record<string, unknown>;
  observation: ObservationDoc;
  log_path: string;
}

export interface N1Row {
  line: string;
  max_rho: number;
  unserved_load: boolean;
}

// ---------------------------------------------------------------------------
// Action drafts
//
// The console composes a draft incrementally (line toggles, busbar moves,
// redispatch slider values); encodeDraft turns it into the protocol action.
// ---------------------------------------------------------------------------

export interface ActionDraft {
  lineStatus: Map<string, boolean>;
  busbars: Map<string, Map<string, Busbar>>; // substation -> element ref -> busbar
  redispatch: Map<string, number>;
}

export function emptyDraft(): ActionDraft {
  return { lineStatus: new Map(), busbars: new Map(), redispatch: new Map() };
}

export function draftIsEmpty(draft: ActionDraft): boolean {
  return (
    draft.lineStatus.size === 0 &&
    draft.busbars.size === 0 &&
    draft.redispatch.size === 0
  );
}

export function encodeDraft(draft: ActionDraft): ActionDoc {
  const action: ActionDoc = {};
  if (draft.lineStatus.size > 0) {
    action.set_line_status = Object.fromEntries(draft.lineStatus);
  }
  if (draft.busbars.size > 0) {
    const subs: Record<string, Record<string, Busbar>> = {};
    for (const [sub, moves] of draft.busbars) {
      if (moves.size > 0) subs[sub] = Object.fromEntries(moves);
    }
    if (Object.keys(subs).length > 0) action.set_busbars = subs;
  }
  if (draft.redispatch.size > 0) {
    action.redispatch = Object.fromEntries(draft.redispatch);
  }
  return action;
}

/**
 * Client-side mirror of the legality rules that give instant feedback;
 * the server's check at advance time stays authoritative.
 * Returns null when the draft looks legal.
 */
export function validateDraft(
  draft: ActionDraft,
  obs: ObservationDoc,
  caseDoc: CaseDoc,
): string | null {
  const touched = [...draft.busbars.entries()].filter(([, m]) => m.size > 0);
  if (touched.length > 1) {
    return "one substation per step";
  }
  for (const [sub, moves] of touched) {
    if (moves.size > 0 && (obs.substation_cooldown[sub] ?? 0) > 0) {
      return `substation ${sub} in cooldown`;
    }
  }
  for (const line of draft.lineStatus.keys()) {
    if ((obs.line_cooldown[line] ?? 0) > 0) {
      return `line ${line} in cooldown`;
    }
  }
  for (const [gen, delta] of draft.redispatch) {
    const doc = caseDoc.generators.find((g) => g.id === gen);
    if (!doc) return `unknown generator ${gen}`;
    if (doc.slack) return "redispatch targets the slack generator";
    if (Math.abs(delta) > doc.ramp + 1e-9) {
      return `generator ${gen}: delta exceeds ramp ${doc.ramp} MW`;
    }
    if (obs.forecast) {
      const target =
        (obs.forecast.gen_p[gen] ?? 0) + (obs.redispatch[gen] ?? 0) + delta;
      if (target < doc.p_min - 1e-9 || target > doc.p_max + 1e-9) {
        return `generator ${gen}: target outside [${doc.p_min}, ${doc.p_max}]`;
      }
    }
  }
  return null;
}

/** Net slack absorption implied by the draft's redispatch deltas. */
export function impliedSlackDelta(draft: ActionDraft): number {
  let total = 0;
  for (const delta of draft.redispatch.values()) total += delta;
  return -total;
}

// ---------------------------------------------------------------------------
// Loading bands
// ---------------------------------------------------------------------------

export type RhoBand = "green" | "amber" | "red";

export function rhoBand(rho: number): RhoBand {
  if (rho >= 1.0) return "red";
  if (rho >= 0.9) return "amber";
  return "green";
}

/** Timer badge text for an overloaded line, e.g. "1/2"; null when clear. */
export function timerBadge(timer: number, maxOverloadSteps: number): string | null {
  if (timer <= 0) return null;
  return `${timer}/${maxOverloadSteps}`;
}

export function maxRho(obs: ObservationDoc): number {
  let worst = 0;
  for (const value of Object.values(obs.rho)) worst = Math.max(worst, value);
  return worst;
}
