// Single-line diagram rendering: substations as nodes with two busbar
// lanes, lines as edges colored by loading band. Positions come from the
// case file's display hints when present, else a small deterministic
// force-directed pass.

import type { CaseDoc, ObservationDoc } from "./protocol.js";
import { rhoBand, timerBadge } from "./protocol.js";

export interface Point {
  x: number;
  y: number;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 860;
const HEIGHT = 560;
const MARGIN = 70;

export function layoutPositions(caseDoc: CaseDoc): Map<string, Point> {
  const raw = new Map<string, Point>();
  const missing = caseDoc.substations.filter((s) => !s.pos);
  for (const sub of caseDoc.substations) {
    if (sub.pos) raw.set(sub.id, { x: sub.pos[0], y: sub.pos[1] });
  }
  if (missing.length > 0) {
    forceLayout(caseDoc, raw);
  }
  return fitToViewport(raw);
}

/** Deterministic spring layout for cases without display hints. */
function forceLayout(caseDoc: CaseDoc, positions: Map<string, Point>): void {
  const n = caseDoc.substations.length;
  caseDoc.substations.forEach((sub, i) => {
    if (!positions.has(sub.id)) {
      const angle = (2 * Math.PI * i) / Math.max(1, n);
      positions.set(sub.id, { x: Math.cos(angle), y: Math.sin(angle) });
    }
  });
  const edges = caseDoc.lines.map((l) => [l.from, l.to] as const);
  for (let iter = 0; iter < 200; iter++) {
    const force = new Map<string, Point>();
    for (const sub of caseDoc.substations) force.set(sub.id, { x: 0, y: 0 });
    for (const a of caseDoc.substations) {
      for (const b of caseDoc.substations) {
        if (a.id >= b.id) continue;
        const pa = positions.get(a.id)!;
        const pb = positions.get(b.id)!;
        const dx = pa.x - pb.x;
        const dy = pa.y - pb.y;
        const d2 = Math.max(1e-4, dx * dx + dy * dy);
        const push = 0.05 / d2;
        force.get(a.id)!.x += dx * push;
        force.get(a.id)!.y += dy * push;
        force.get(b.id)!.x -= dx * push;
        force.get(b.id)!.y -= dy * push;
      }
    }
    for (const [from, to] of edges) {
      const pa = positions.get(from)!;
      const pb = positions.get(to)!;
      const dx = pb.x - pa.x;
      const dy = pb.y - pa.y;
      force.get(from)!.x += dx * 0.02;
      force.get(from)!.y += dy * 0.02;
      force.get(to)!.x -= dx * 0.02;
      force.get(to)!.y -= dy * 0.02;
    }
    for (const sub of caseDoc.substations) {
      const p = positions.get(sub.id)!;
      const f = force.get(sub.id)!;
      p.x += Math.max(-0.1, Math.min(0.1, f.x));
      p.y += Math.max(-0.1, Math.min(0.1, f.y));
    }
  }
}

function fitToViewport(raw: Map<string, Point>): Map<string, Point> {
  const xs = [...raw.values()].map((p) => p.x);
  const ys = [...raw.values()].map((p) => p.y);
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 1);
  const minY = Math.min(...ys, 0);
  const maxY = Math.max(...ys, 1);
  const out = new Map<string, Point>();
  for (const [id, p] of raw) {
    out.set(id, {
      x: MARGIN + ((p.x - minX) / (maxX - minX || 1)) * (WIDTH - 2 * MARGIN),
      y: MARGIN + ((p.y - minY) / (maxY - minY || 1)) * (HEIGHT - 2 * MARGIN),
    });
  }
  return out;
}

function el(name: string, attrs: Record<string, string>, text?: string): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface RenderHooks {
  onLineClick?: (lineId: string) => void;
  onElementClick?: (sub: string, ref: string) => void;
}

/** Substations with elements on both busbars are drawn as two lanes. */
function splitSubstations(caseDoc: CaseDoc, obs: ObservationDoc): Set<string> {
  const seen = new Map<string, Set<number>>();
  const subOfRef = refSubstationIndex(caseDoc);
  for (const [ref, busbar] of Object.entries(obs.topology.busbar_of)) {
    const sub = subOfRef.get(ref);
    if (!sub) continue;
    if (!seen.has(sub)) seen.set(sub, new Set());
    seen.get(sub)!.add(busbar);
  }
  return new Set([...seen.entries()].filter(([, b]) => b.size > 1).map(([s]) => s));
}

export function refSubstationIndex(caseDoc: CaseDoc): Map<string, string> {
  const index = new Map<string, string>();
  for (const line of caseDoc.lines) {
    index.set(`line_from:${line.id}`, line.from);
    index.set(`line_to:${line.id}`, line.to);
  }
  for (const g of caseDoc.generators) index.set(`gen:${g.id}`, g.sub);
  for (const d of caseDoc.loads) index.set(`load:${d.id}`, d.sub);
  return index;
}

export function renderGrid(
  svg: SVGSVGElement,
  caseDoc: CaseDoc,
  obs: ObservationDoc,
  positions: Map<string, Point>,
  maxOverloadSteps: number,
  hooks: RenderHooks = {},
  stale = false,
): void {
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.replaceChildren();
  const split = splitSubstations(caseDoc, obs);

  for (const line of caseDoc.lines) {
    const a = positions.get(line.from)!;
    const b = positions.get(line.to)!;
    const inService = obs.topology.line_status[line.id];
    const group = el("g", { class: "line-group", "data-line": line.id });
    const rho = obs.rho[line.id];
    const band = inService && rho !== undefined ? rhoBand(rho) : "off";
    const edge = el("line", {
      x1: String(a.x),
      y1: String(a.y),
      x2: String(b.x),
      y2: String(b.y),
      class: `edge edge-${band}${inService ? "" : " edge-out"}`,
    });
    group.appendChild(edge);
    const mx = (a.x + b.x) / 2;
    const my = (a.y + b.y) / 2;
    if (inService && rho !== undefined) {
      group.appendChild(
        el("text", { x: String(mx), y: String(my - 6), class: "edge-label" },
           `${line.id} ${(rho * 100).toFixed(0)}%`),
      );
      const badge = timerBadge(obs.overload_timer[line.id] ?? 0, maxOverloadSteps);
      if (badge) {
        group.appendChild(
          el("text", { x: String(mx), y: String(my + 12), class: "timer-badge" }, badge),
        );
      }
    } else {
      group.appendChild(
        el("text", { x: String(mx), y: String(my - 6), class: "edge-label edge-label-out" },
           line.id),
      );
    }
    if (hooks.onLineClick) {
      group.addEventListener("click", () => hooks.onLineClick!(line.id));
    }
    svg.appendChild(group);
  }

  for (const sub of caseDoc.substations) {
    const p = positions.get(sub.id)!;
    const group = el("g", { class: "sub-group", "data-sub": sub.id });
    if (split.has(sub.id)) {
      group.appendChild(el("rect", {
        x: String(p.x - 22), y: String(p.y - 10), width: "44", height: "6",
        class: "busbar busbar-1",
      }));
      group.appendChild(el("rect", {
        x: String(p.x - 22), y: String(p.y + 4), width: "44", height: "6",
        class: "busbar busbar-2",
      }));
    } else {
      group.appendChild(el("rect", {
        x: String(p.x - 22), y: String(p.y - 3), width: "44", height: "6",
        class: "busbar busbar-fused",
      }));
    }
    group.appendChild(
      el("text", { x: String(p.x), y: String(p.y - 18), class: "sub-label" }, sub.id),
    );
    svg.appendChild(group);
  }

  // generator / load glyphs stacked under their substation
  const glyphOffsets = new Map<string, number>();
  const nextOffset = (sub: string) => {
    const n = glyphOffsets.get(sub) ?? 0;
    glyphOffsets.set(sub, n + 1);
    return n;
  };
  for (const g of caseDoc.generators) {
    const p = positions.get(g.sub)!;
    const dx = -16 + 16 * nextOffset(g.sub);
    const mw = obs.injections.gen_p[g.id] ?? 0;
    const glyph = el("g", { class: "glyph gen-glyph", "data-ref": `gen:${g.id}` });
    glyph.appendChild(el("circle", {
      cx: String(p.x + dx), cy: String(p.y + 24), r: "7",
      class: g.slack ? "gen slack" : "gen",
    }));
    glyph.appendChild(el("text", {
      x: String(p.x + dx), y: String(p.y + 28), class: "glyph-label",
    }, "G"));
    glyph.appendChild(el("title", {}, `${g.id}: ${mw.toFixed(1)} MW`));
    if (hooks.onElementClick) {
      glyph.addEventListener("click", () => hooks.onElementClick!(g.sub, `gen:${g.id}`));
    }
    svg.appendChild(glyph);
  }
  for (const d of caseDoc.loads) {
    const p = positions.get(d.sub)!;
    const dx = -16 + 16 * nextOffset(d.sub);
    const mw = obs.injections.load_p[d.id] ?? 0;
    const glyph = el("g", { class: "glyph load-glyph", "data-ref": `load:${d.id}` });
    glyph.appendChild(el("rect", {
      x: String(p.x + dx - 6), y: String(p.y + 18), width: "12", height: "12",
      class: "load",
    }));
    glyph.appendChild(el("text", {
      x: String(p.x + dx), y: String(p.y + 28), class: "glyph-label",
    }, "L"));
    glyph.appendChild(el("title", {}, `${d.id}: ${mw.toFixed(1)} MW`));
    if (hooks.onElementClick) {
      glyph.addEventListener("click", () => hooks.onElementClick!(d.sub, `load:${d.id}`));
    }
    svg.appendChild(glyph);
  }

  if (stale) {
    svg.appendChild(el("text", {
      x: String(WIDTH / 2), y: "24", class: "stale-indicator",
    }, "connection stale: no server pushes"));
  }
}
