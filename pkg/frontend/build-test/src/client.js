// Protocol client over a pluggable text transport: the browser wraps a
// WebSocket, tests wrap a TCP socket speaking newline-delimited JSON.
// One in-flight map keyed by corr_id; pushes (no corr_id) fan out to
// subscribers.
export class ProtocolError extends Error {
}
export class ProtocolClient {
    transport;
    hello;
    pending = new Map();
    pushHandlers = [];
    seq = 0;
    closed = false;
    constructor(transport) {
        this.transport = transport;
        let resolveHello;
        let rejectHello;
        this.hello = new Promise((res, rej) => {
            resolveHello = res;
            rejectHello = rej;
        });
        transport.onMessage((text) => {
            let msg;
            try {
                msg = JSON.parse(text);
            }
            catch {
                return; // not ours to crash on; the server logs protocol errors
            }
            if (msg.type === "hello") {
                resolveHello(msg);
                return;
            }
            const corr = msg.corr_id;
            if (corr && this.pending.has(corr)) {
                const entry = this.pending.get(corr);
                this.pending.delete(corr);
                if (msg.type === "error") {
                    entry.reject(new ProtocolError(String(msg.message)));
                }
                else {
                    entry.resolve(msg);
                }
                return;
            }
            for (const handler of this.pushHandlers)
                handler(msg);
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
    onPush(handler) {
        this.pushHandlers.push(handler);
    }
    request(msg) {
        if (this.closed) {
            return Promise.reject(new ProtocolError("connection closed"));
        }
        const corr = `q${++this.seq}`;
        const promise = new Promise((resolve, reject) => {
            this.pending.set(corr, { resolve, reject });
        });
        this.transport.send(JSON.stringify({ ...msg, corr_id: corr }));
        return promise;
    }
    close() {
        this.transport.close();
    }
    // -- typed conveniences ----------------------------------------------------
    async createSession(episode, seed) {
        const msg = { type: "create_session" };
        if (episode !== undefined)
            msg.episode = episode;
        if (seed !== undefined)
            msg.seed = seed;
        return (await this.request(msg));
    }
    async getObservation(session) {
        return (await this.request({
            type: "get_observation",
            session,
        }));
    }
    async act(session, action) {
        return (await this.request({ type: "act", session, action }));
    }
    async advance(session) {
        return (await this.request({ type: "advance", session }));
    }
    async simulate(session, action) {
        return (await this.request({
            type: "simulate",
            session,
            action,
        }));
    }
    async n1Screen(session) {
        const reply = await this.request({ type: "n1_screen", session });
        return reply.rows;
    }
    async subscribe(session) {
        await this.request({ type: "subscribe", session });
    }
    async transferAuthority(session, to) {
        const reply = await this.request({ type: "transfer_authority", session, to });
        return reply.authority;
    }
}
/** Browser transport: one protocol message per WebSocket text frame. */
export function webSocketTransport(url) {
    const ws = new WebSocket(url);
    const messageHandlers = [];
    const closeHandlers = [];
    ws.onmessage = (event) => {
        for (const handler of messageHandlers)
            handler(String(event.data));
    };
    ws.onclose = () => {
        for (const handler of closeHandlers)
            handler();
    };
    const queue = [];
    ws.onopen = () => {
        for (const text of queue.splice(0))
            ws.send(text);
    };
    return {
        send(text) {
            if (ws.readyState === WebSocket.OPEN)
                ws.send(text);
            else
                queue.push(text);
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
