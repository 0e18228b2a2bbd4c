// End-to-end: spawn the real service, drive an episode through the
// console's ProtocolClient (over the TCP framing), and verify the two
// console-side guarantees: what-if isolation and step fidelity (the
// server log replays bit-identically).
import assert from "node:assert/strict";
import { after, before, test } from "node:test";
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { createConnection } from "node:net";
import { join, resolve } from "node:path";
import { ProtocolClient } from "../src/client.js";
import { applyStep, initialModel } from "../src/model.js";
const REPO = resolve(import.meta.dirname, "..", "..", "..");
const PYTHON = process.env.PYTHON ?? "python3";
let service;
let tcpPort = 0;
let logDir = "";
function tcpTransport(port) {
    const socket = createConnection({ host: "127.0.0.1", port });
    const messageHandlers = [];
    const closeHandlers = [];
    let buffer = "";
    socket.on("data", (chunk) => {
        buffer += chunk.toString("utf8");
        let nl;
        while ((nl = buffer.indexOf("\n")) >= 0) {
            const line = buffer.slice(0, nl);
            buffer = buffer.slice(nl + 1);
            if (line.trim())
                for (const handler of messageHandlers)
                    handler(line);
        }
    });
    socket.on("close", () => {
        for (const handler of closeHandlers)
            handler();
    });
    return {
        send: (text) => void socket.write(text + "\n"),
        onMessage: (handler) => void messageHandlers.push(handler),
        onClose: (handler) => void closeHandlers.push(handler),
        close: () => socket.end(),
    };
}
before(async () => {
    logDir = mkdtempSync(join(tmpdir(), "gridgym-console-"));
    service = spawn(PYTHON, [
        "-m", "gridgym", "serve",
        "--case", "cases/fig5_5sub.json",
        "--chronics", "chronics",
        "--bind", "127.0.0.1:0",
        "--tcp-bind", "127.0.0.1:0",
        "--log-dir", logDir,
    ], { cwd: REPO, env: { ...process.env, PYTHONPATH: join(REPO, "src") } });
    const banner = await new Promise((resolvePort, reject) => {
        let out = "";
        service.stdout.on("data", (chunk) => {
            out += String(chunk);
            const match = out.match(/tcp=127\.0\.0\.1:(\d+)/);
            if (match)
                resolvePort(match[1]);
        });
        service.stderr.on("data", (chunk) => process.stderr.write(String(chunk)));
        service.on("exit", (code) => reject(new Error(`service exited early: ${code}`)));
        setTimeout(() => reject(new Error("service did not start in time")), 15000);
    });
    tcpPort = Number(banner);
});
after(() => {
    service?.kill();
});
test("console what-if isolation: simulations leave the observation unchanged", async () => {
    const client = new ProtocolClient(tcpTransport(tcpPort));
    await client.hello;
    const created = await client.createSession("fig5_stress", 0);
    const before = await client.getObservation(created.session);
    const drafts = [
        { set_line_status: { L12: false } },
        { set_line_status: { L13: false } },
        { set_line_status: { L23: false } },
        { set_line_status: { L34: false } },
        { set_line_status: { L45: false } },
        { set_line_status: { L25: false } },
        { set_busbars: { S3: { "line_to:L23": 2, "load:load_3": 2 } } },
        { set_busbars: { S2: { "line_from:L23": 2, "gen:gen_2": 2 } } },
        { redispatch: { gen_2: 10.0 } },
        { redispatch: { gen_5: -5.0 } },
    ];
    assert.equal(drafts.length, 10);
    for (const draft of drafts) {
        const sim = await client.simulate(created.session, draft);
        assert.ok(typeof sim.reward === "number");
    }
    const afterObs = await client.getObservation(created.session);
    assert.deepEqual(afterObs.observation, before.observation);
    client.close();
});
test("console-driven episode: pushes mirror results and the log replays", async () => {
    const client = new ProtocolClient(tcpTransport(tcpPort));
    await client.hello;
    const created = await client.createSession("fig5_stress", 0);
    await client.subscribe(created.session);
    let model = initialModel(created, Date.now());
    const pushes = [];
    client.onPush((msg) => {
        if (msg.type === "state_push")
            pushes.push(msg);
    });
    // stage the relieving split, then run the episode to completion
    const ack = await client.act(created.session, {
        set_busbars: { S3: { "line_to:L23": 2, "load:load_3": 2 } },
    });
    assert.equal(ack.applied, "staged");
    let last;
    do {
        last = await client.advance(created.session);
        model = applyStep(model, last, Date.now());
    } while (!last.done);
    assert.equal(model.termination, "chronics_exhausted");
    assert.ok(model.gameOver);
    assert.ok(model.scoreSoFar > 0);
    assert.equal(model.timeline.length, 47);
    // every subscriber push carried the same payload the requester saw
    assert.equal(pushes.length, model.timeline.length);
    // timeline actions equal the server's log records, field for field
    const logText = readFileSync(created.log_path.startsWith("/")
        ? created.log_path
        : join(REPO, created.log_path), "utf8");
    const records = logText.trim().split("\n").map((line) => JSON.parse(line));
    const steps = records.filter((r) => r.type === "step");
    assert.equal(steps.length, model.timeline.length);
    for (let i = 0; i < steps.length; i++) {
        assert.deepEqual(model.timeline[i].action, steps[i].applied_action);
        assert.equal(model.timeline[i].reward, steps[i].reward);
    }
    // the served log replays bit-identically through the CLI
    const replay = spawnSync(PYTHON, ["-m", "gridgym", "replay", "--log", created.log_path, "--verify"], { cwd: REPO, env: { ...process.env, PYTHONPATH: join(REPO, "src") }, encoding: "utf8" });
    assert.equal(replay.status, 0, replay.stderr);
    assert.match(replay.stdout, /bit-identical/);
    client.close();
});
