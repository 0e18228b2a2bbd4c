// Console bootstrap: connect, create a session, subscribe, and wire the
// diagram and panels to the protocol client.

import { ProtocolClient, ProtocolError, webSocketTransport } from "./client.js";
import {
  applyAuthority,
  applySimulation,
  applyStep,
  initialModel,
  isStale,
  type ConsoleModel,
} from "./model.js";
import {
  renderAlarms,
  renderDraft,
  renderGameOver,
  renderN1Table,
  renderSimPanel,
  renderStatus,
  renderTimeline,
  showModal,
} from "./panels.js";
import { layoutPositions, renderGrid, type Point } from "./render.js";
import {
  draftIsEmpty,
  emptyDraft,
  encodeDraft,
  validateDraft,
  type Busbar,
  type StepPayload,
} from "./protocol.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  const client = new ProtocolClient(webSocketTransport(wsUrl));
  await client.hello;

  const created = await client.createSession(
    params.get("episode") ?? undefined,
    params.has("seed") ? Number(params.get("seed")) : undefined,
  );
  let model: ConsoleModel = initialModel(created, Date.now());
  await client.subscribe(model.session);

  const svg = byId<HTMLElement>("diagram") as unknown as SVGSVGElement;
  const positions: Map<string, Point> = layoutPositions(model.caseDoc);

  const redraw = () => {
    renderStatus(byId("status"), model);
    renderGrid(svg, model.caseDoc, model.observation, positions, model.maxOverloadSteps, {
      onLineClick: toggleLine,
      onElementClick: moveElement,
    }, isStale(model, Date.now()));
    renderDraft(byId("draft"), model.draft, model.caseDoc);
    renderSimPanel(byId("sim"), model);
    renderAlarms(byId("alarms"), model);
    renderTimeline(byId("timeline"), model.timeline);
    renderGameOver(byId("gameover"), model);
  };

  const toggleLine = (lineId: string) => {
    if (model.done) return;
    const current =
      model.draft.lineStatus.get(lineId) ?? model.observation.topology.line_status[lineId];
    if (model.draft.lineStatus.has(lineId)) model.draft.lineStatus.delete(lineId);
    else model.draft.lineStatus.set(lineId, !current);
    redraw();
  };

  const moveElement = (sub: string, ref: string) => {
    if (model.done) return;
    const staged = model.draft.busbars.get(sub)?.get(ref);
    const current = staged ?? model.observation.topology.busbar_of[ref];
    const next = (current === 1 ? 2 : 1) as Busbar;
    if (!model.draft.busbars.has(sub)) model.draft.busbars.set(sub, new Map());
    const moves = model.draft.busbars.get(sub)!;
    if (staged !== undefined) moves.delete(ref);
    else moves.set(ref, next);
    if (moves.size === 0) model.draft.busbars.delete(sub);
    redraw();
  };

  client.onPush((msg) => {
    if (msg.type === "state_push" && msg.session === model.session) {
      model = applyStep(model, msg as unknown as StepPayload, Date.now());
      redraw();
    }
  });

  byId("btn-simulate").addEventListener("click", async () => {
    const blocked = validateDraft(model.draft, model.observation, model.caseDoc);
    if (blocked) {
      showModal(byId("modal"), blocked);
      return;
    }
    try {
      const baseline = await client.simulate(model.session, {});
      const action = encodeDraft(model.draft);
      const predicted = await client.simulate(model.session, action);
      model = applySimulation(model, action, predicted, baseline);
      redraw();
    } catch (err) {
      showModal(byId("modal"), err instanceof ProtocolError ? err.message : String(err));
    }
  });

  byId("btn-commit").addEventListener("click", async () => {
    const blocked = validateDraft(model.draft, model.observation, model.caseDoc);
    if (blocked) {
      showModal(byId("modal"), blocked);
      return;
    }
    try {
      if (!draftIsEmpty(model.draft)) {
        await client.act(model.session, encodeDraft(model.draft));
      }
      await client.advance(model.session);
      // the subscribed push updates the model atomically
    } catch (err) {
      showModal(byId("modal"), err instanceof ProtocolError ? err.message : String(err));
    }
  });

  byId("btn-clear").addEventListener("click", () => {
    model = { ...model, draft: emptyDraft(), sim: null };
    redraw();
  });

  byId("btn-n1").addEventListener("click", async () => {
    try {
      renderN1Table(byId("n1"), await client.n1Screen(model.session));
    } catch (err) {
      showModal(byId("modal"), err instanceof ProtocolError ? err.message : String(err));
    }
  });

  byId("btn-release").addEventListener("click", async () => {
    const target = prompt("transfer step authority to client id:");
    if (!target) return;
    try {
      model = applyAuthority(model, await client.transferAuthority(model.session, target));
      redraw();
    } catch (err) {
      showModal(byId("modal"), err instanceof ProtocolError ? err.message : String(err));
    }
  });

  byId("modal").addEventListener("click", () => showModal(byId("modal"), null));

  setInterval(redraw, 15_000); // refresh the stale indicator
  redraw();
}

boot().catch((err) => {
  document.body.textContent = `console failed to start: ${err}`;
});
