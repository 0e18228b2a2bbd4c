// Wire protocol types and pure helpers shared by the console and its tests.
// The shapes mirror docs/protocol.md (protocol version 1) field for field.
export const PROTOCOL_VERSION = "1";
export function emptyDraft() {
    return { lineStatus: new Map(), busbars: new Map(), redispatch: new Map() };
}
export function draftIsEmpty(draft) {
    return (draft.lineStatus.size === 0 &&
        draft.busbars.size === 0 &&
        draft.redispatch.size === 0);
}
export function encodeDraft(draft) {
    const action = {};
    if (draft.lineStatus.size > 0) {
        action.set_line_status = Object.fromEntries(draft.lineStatus);
    }
    if (draft.busbars.size > 0) {
        const subs = {};
        for (const [sub, moves] of draft.busbars) {
            if (moves.size > 0)
                subs[sub] = Object.fromEntries(moves);
        }
        if (Object.keys(subs).length > 0)
            action.set_busbars = subs;
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
export function validateDraft(draft, obs, caseDoc) {
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
        if (!doc)
            return `unknown generator ${gen}`;
        if (doc.slack)
            return "redispatch targets the slack generator";
        if (Math.abs(delta) > doc.ramp + 1e-9) {
            return `generator ${gen}: delta exceeds ramp ${doc.ramp} MW`;
        }
        if (obs.forecast) {
            const target = (obs.forecast.gen_p[gen] ?? 0) + (obs.redispatch[gen] ?? 0) + delta;
            if (target < doc.p_min - 1e-9 || target > doc.p_max + 1e-9) {
                return `generator ${gen}: target outside [${doc.p_min}, ${doc.p_max}]`;
            }
        }
    }
    return null;
}
/** Net slack absorption implied by the draft's redispatch deltas. */
export function impliedSlackDelta(draft) {
    let total = 0;
    for (const delta of draft.redispatch.values())
        total += delta;
    return -total;
}
export function rhoBand(rho) {
    if (rho >= 1.0)
        return "red";
    if (rho >= 0.9)
        return "amber";
    return "green";
}
/** Timer badge text for an overloaded line, e.g. "1/2"; null when clear. */
export function timerBadge(timer, maxOverloadSteps) {
    if (timer <= 0)
        return null;
    return `${timer}/${maxOverloadSteps}`;
}
export function maxRho(obs) {
    let worst = 0;
    for (const value of Object.values(obs.rho))
        worst = Math.max(worst, value);
    return worst;
}
