// Side-panel rendering: action draft, simulation results, alarms, N-1
// table, timeline, and the game-over screen. Pure DOM, no framework.
import { holdsAuthority, sparklinePoints } from "./model.js";
import { encodeDraft, impliedSlackDelta } from "./protocol.js";
function div(className, text) {
    const node = document.createElement("div");
    node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
export function renderStatus(root, model) {
    root.replaceChildren();
    const obs = model.observation;
    root.appendChild(div("status-item", `episode ${model.episode}`));
    root.appendChild(div("status-item", `t=${obs.timestep}  ${obs.timestamp}`));
    root.appendChild(div("status-item", `score ${model.scoreSoFar.toFixed(4)}`));
    root.appendChild(div("status-item " + (holdsAuthority(model) ? "authority-yes" : "authority-no"), holdsAuthority(model) ? "step authority: you" : `step authority: ${model.authority}`));
    if (model.banner)
        root.appendChild(div("banner", model.banner));
}
export function renderDraft(root, draft, caseDoc) {
    root.replaceChildren();
    root.appendChild(div("panel-title", "action draft"));
    const action = encodeDraft(draft);
    if (!action.set_line_status && !action.set_busbars && !action.redispatch) {
        root.appendChild(div("muted", "do-nothing (click lines / elements to edit)"));
        return;
    }
    for (const [line, status] of Object.entries(action.set_line_status ?? {})) {
        root.appendChild(div("draft-item", `${line} -> ${status ? "in service" : "out"}`));
    }
    for (const [sub, moves] of Object.entries(action.set_busbars ?? {})) {
        for (const [ref, busbar] of Object.entries(moves)) {
            root.appendChild(div("draft-item", `${sub}: ${ref} -> busbar ${busbar}`));
        }
    }
    for (const [gen, delta] of Object.entries(action.redispatch ?? {})) {
        root.appendChild(div("draft-item", `${gen} ${delta >= 0 ? "+" : ""}${delta} MW`));
    }
    const slack = impliedSlackDelta(draft);
    if (slack !== 0) {
        const slackGen = caseDoc.generators.find((g) => g.slack);
        root.appendChild(div("muted", `slack ${slackGen?.id ?? "?"} absorbs ${slack >= 0 ? "+" : ""}${slack} MW`));
    }
}
export function renderSimPanel(root, model) {
    root.replaceChildren();
    root.appendChild(div("panel-title", "what-if"));
    if (!model.sim) {
        root.appendChild(div("muted", "stage a draft and press simulate"));
        return;
    }
    const sim = model.sim;
    root.appendChild(div("sim-line", `predicted max rho: ${(sim.predictedMaxRho * 100).toFixed(1)}%`));
    root.appendChild(div("sim-line", `reward delta vs do-nothing: ${sim.rewardDelta >= 0 ? "+" : ""}${sim.rewardDelta.toFixed(4)}`));
    if (sim.gameOverWarning) {
        root.appendChild(div("sim-warning", `predicted game over: ${sim.predictedTermination}`));
    }
    for (const event of sim.cascade) {
        root.appendChild(div("sim-line cascade", `wave ${event.wave}: ${event.line} trips (${event.reason}, rho ${(event.rho * 100).toFixed(0)}%)`));
    }
}
export function renderAlarms(root, model) {
    root.replaceChildren();
    root.appendChild(div("panel-title", "alarms"));
    if (model.alarms.length === 0) {
        root.appendChild(div("muted", "no overloads"));
        return;
    }
    for (const alarm of model.alarms) {
        root.appendChild(div("alarm", `${alarm.line} at ${(alarm.rho * 100).toFixed(0)}% (timer ${alarm.timer}/${model.maxOverloadSteps})`));
    }
}
export function renderN1Table(root, rows) {
    root.replaceChildren();
    root.appendChild(div("panel-title", "N-1 screen"));
    const table = document.createElement("table");
    table.className = "n1-table";
    const head = table.insertRow();
    for (const label of ["outage", "max rho", "unserved load"]) {
        const cell = document.createElement("th");
        cell.textContent = label;
        head.appendChild(cell);
    }
    const sorted = [...rows].sort((a, b) => b.max_rho - a.max_rho);
    for (const row of sorted) {
        const tr = table.insertRow();
        tr.insertCell().textContent = row.line;
        tr.insertCell().textContent = `${(row.max_rho * 100).toFixed(1)}%`;
        const flag = tr.insertCell();
        flag.textContent = row.unserved_load ? "yes" : "no";
        if (row.unserved_load || row.max_rho >= 1.0)
            tr.className = "n1-risk";
    }
    root.appendChild(table);
}
export function renderTimeline(root, timeline) {
    root.replaceChildren();
    root.appendChild(div("panel-title", "timeline"));
    const svgNS = "http://www.w3.org/2000/svg";
    const spark = document.createElementNS(svgNS, "svg");
    spark.setAttribute("viewBox", "0 0 300 40");
    spark.setAttribute("class", "sparkline");
    const poly = document.createElementNS(svgNS, "polyline");
    poly.setAttribute("points", sparklinePoints(timeline, 300, 40));
    spark.appendChild(poly);
    root.appendChild(spark);
    const recent = timeline.slice(-8).reverse();
    for (const entry of recent) {
        const label = describeAction(entry);
        root.appendChild(div("timeline-entry", `t=${entry.t}  r=${entry.reward.toFixed(3)}  ${label}`));
    }
}
function describeAction(entry) {
    const action = entry.action;
    const parts = [];
    for (const [line, status] of Object.entries(action.set_line_status)) {
        parts.push(`${line}:${status ? "in" : "out"}`);
    }
    for (const [sub, moves] of Object.entries(action.set_busbars)) {
        parts.push(`${sub} split(${Object.keys(moves).length})`);
    }
    for (const [gen, delta] of Object.entries(action.redispatch)) {
        parts.push(`${gen}${delta >= 0 ? "+" : ""}${delta}`);
    }
    if (entry.illegalReason)
        parts.push("(converted: illegal)");
    return parts.length ? parts.join(" ") : "do-nothing";
}
export function renderGameOver(root, model) {
    if (!model.gameOver) {
        root.replaceChildren();
        root.classList.remove("visible");
        return;
    }
    root.replaceChildren();
    root.classList.add("visible");
    const failed = model.gameOver.termination !== "chronics_exhausted";
    root.appendChild(div("gameover-title", failed ? "GAME OVER" : "EPISODE COMPLETE"));
    root.appendChild(div("gameover-line", `termination: ${model.gameOver.termination}`));
    root.appendChild(div("gameover-line", `final score: ${model.gameOver.finalScore.toFixed(4)}`));
    for (const event of model.gameOver.cascade) {
        root.appendChild(div("gameover-line", `wave ${event.wave}: ${event.line} (${event.reason})`));
    }
}
export function showModal(root, message) {
    root.replaceChildren();
    if (message === null) {
        root.classList.remove("visible");
        return;
    }
    root.classList.add("visible");
    root.appendChild(div("modal-box", message));
}
