// Protocol client over a pluggable text transport: the browser wraps a
// WebSocket, tests wrap a TCP socket speaking newline-delimited JSON.
// One in-flight map keyed by corr_id; pushes (no corr_id) fan out to
// subscribers.

import type {
  ActionDoc,
  N1Row,
  ObservationDoc,
  SessionCreated,
  StepPayload,
  Termination,
} from "./protocol.js";

export interface Transport {
  send(text: string): void;
  onMessage(handler: (text: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export interface Hello {
  client_id: string;
  protocol: string;
}

export interface ObservationReply {
  session: string;
  t: number;
  done: boolean;
  termination: Termination;
  observation: ObservationDoc;
}

interface Pending {
  resolve: (msg: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class ProtocolError extends Error {}

export class ProtocolClient {
  readonly hello: Promise<Hello>;
  private pending = new Map<string, Pending>();
  private pushHandlers: Array<(msg: Record<string, unknown>) => void> = [];
  private seq = 0;
  private closed = false;

  constructor(private transport: Transport) {
    let resolveHello: (h: Hello) => void;
    let rejectHello: (e: Error) => void;
    this.hello = new Promise<Hello>((res, rej) => {
      resolveHello = res;
      rejectHello = rej;
    });
    transport.onMessage((text) => {
      let msg: Record<string, unknown>;
      try {
        msg = JSON.parse(text) as Record<string, unknown>;
      } catch {
        return; // not ours to crash on; the server logs protocol errors
      }
      if (msg.type === "hello") {
        resolveHello(msg as unknown as Hello);
        return;
      }
      const corr = msg.corr_id as string | undefined;
      if (corr && this.pending.has(corr)) {
        const entry = this.pending.get(corr)!;
        this.pending.delete(corr);
        if (msg.type === "error") {
          entry.reject(new ProtocolError(String(msg.message)));
        } else {
          entry.resolve(msg);
        }
        return;
      }
      for (const handler of this.pushHandlers) handler(msg);
    });
    transport.onClose(() => {
      this.closed = true;
      rejectHello(new ProtocolError("connection closed"));
      for (const entry of this.pending.values()) {
        entry.reject(new ProtocolError("connection closed"));
      }
      this.pending.clear();
    });
  }

  onPush(handler: (msg: Record<string, unknown>) => void): void {
    this.pushHandlers.push(handler);
  }

  request(msg: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new ProtocolError("connection closed"));
    }
    const corr = `q${++this.seq}`;
    const promise = new Promise<Record<string, unknown>>((resolve, reject) => {
      this.pending.set(corr, { resolve, reject });
    });
    this.transport.send(JSON.stringify({ ...msg, corr_id: corr }));
    return promise;
  }

  close(): void {
    this.transport.close();
  }

  // -- typed conveniences ----------------------------------------------------

  async createSession(episode?: string, seed?: number): Promise<SessionCreated> {
    const msg: Record<string, unknown> = { type: "create_session" };
    if (episode !== undefined) msg.episode = episode;
    if (seed !== undefined) msg.seed = seed;
    return (await this.request(msg)) as unknown as SessionCreated;
  }

  async getObservation(session: string): Promise<ObservationReply> {
    return (await this.request({
      type: "get_observation",
      session,
    })) as unknown as ObservationReply;
  }

  async act(
    session: string,
    action: ActionDoc,
  ): Promise<{ applied: "staged" | "do_nothing"; illegal_reason?: string }> {
    return (await this.request({ type: "act", session, action })) as unknown as {
      applied: "staged" | "do_nothing";
      illegal_reason?: string;
    };
  }

  async advance(session: string): Promise<StepPayload> {
    return (await this.request({ type: "advance", session })) as unknown as StepPayload;
  }

  async simulate(session: string, action: ActionDoc): Promise<StepPayload> {
    return (await this.request({
      type: "simulate",
      session,
      action,
    })) as unknown as StepPayload;
  }

  async n1Screen(session: string): Promise<N1Row[]> {
    const reply = await this.request({ type: "n1_screen", session });
    return reply.rows as N1Row[];
  }

  async subscribe(session: string): Promise<void> {
    await this.request({ type: "subscribe", session });
  }

  async transferAuthority(session: string, to: string): Promise<string> {
    const reply = await this.request({ type: "transfer_authority", session, to });
    return reply.authority as string;
  }
}

/** Browser transport: one protocol message per WebSocket text frame. */
export function webSocketTransport(url: string): Transport {
  const ws = new WebSocket(url);
  const messageHandlers: Array<(text: string) => void> = [];
  const closeHandlers: Array<() => void> = [];
  ws.onmessage = (event) => {
    for (const handler of messageHandlers) handler(String(event.data));
  };
  ws.onclose = () => {
    for (const handler of closeHandlers) handler();
  };
  const queue: string[] = [];
  ws.onopen = () => {
    for (const text of queue.splice(0)) ws.send(text);
  };
  return {
    send(text) {
      if (ws.readyState === WebSocket.OPEN) ws.send(text);
      else queue.push(text);
    },
    onMessage(handler) {
      messageHandlers.push(handler);
    },
    onClose(handler) {
      closeHandlers.push(handler);
    },
    close() {
      ws.close();
    },
  };
}
