"""Long-running service: the wire protocol over WebSocket and TCP.

One environment per session; protocol messages within a session are
processed in arrival order (the event loop serializes the synchronous
environment calls; advances additionally take the session lock so queued
advances apply one at a time). Exactly one client holds step authority
per session: only it may stage actions and advance time. Subscribers
receive a state push after every advance.

Transports carry the same JSON messages: one text frame per message over
WebSocket at /ws, one line per message over TCP (newline-delimited).
docs/protocol.md is the normative description.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from aiohttp import WSMsgType, web

from .agents import episode_config_hash, step_record
from .chronics import load_chronics
from .environment import (
    Action,
    EnvConfig,
    GridEnv,
    action_from_dict,
    check_legal,
    episode_score,
    observation_to_dict,
)
from .errors import EpisodeFinished, GridGymError
from .grid_model import case_to_dict, load_case
from .log_io import EpisodeLog, canonical_json

PROTOCOL_VERSION = "1"

HUB_KEY = web.AppKey("hub", "Hub")


class Client:
    def __init__(self, cid: str, send):
        self.cid = cid
        self._send = send  # async callable(dict)

    async def push(self, message: dict) -> None:
        try:
            await self._send(message)
        except (ConnectionError, RuntimeError):
            pass  # subscriber went away; the hub prunes on disconnect


class Session:
    def __init__(self, sid: str, env: GridEnv, episode: str, log: EpisodeLog, log_path: Path):
        self.sid = sid
        self.env = env
        self.episode = episode
        self.authority: str | None = None
        self.subscribers: dict[str, Client] = {}
        self.pending: Action = Action()
        self.lock = asyncio.Lock()
        self.log = log
        self.log_path = log_path
        self.ended = False

    def append_record(self, record: dict) -> None:
        with self.log_path.open("a") as fh:
            fh.write(canonical_json(record) + "\n")


class Hub:
    """Shared service state: the case, available episodes, live sessions."""

    def __init__(self, case_path: Path, chronics_root: Path, config: EnvConfig,
                 log_dir: Path, default_seed: int = 0):
        self.case_path = case_path
        self.case = load_case(case_path)
        self.case_doc = case_to_dict(self.case)
        self.config = config
        self.log_dir = log_dir
        self.default_seed = default_seed
        self.chronics_root = chronics_root
        self.episodes = self._discover_episodes(chronics_root)
        self.sessions: dict[str, Session] = {}
        self.clients: dict[str, Client] = {}
        self._session_seq = 0
        self._client_seq = 0
        log_dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _discover_episodes(root: Path) -> dict[str, Path]:
        if (root / "meta.json").exists():
            return {root.name: root}
        episodes = {
            p.name: p for p in sorted(root.iterdir())
            if p.is_dir() and (p / "meta.json").exists()
        }
        if not episodes:
            raise FileNotFoundError(f"no chronics episodes under {root}")
        return episodes

    def register_client(self, send) -> Client:
        self._client_seq += 1
        client = Client(f"c{self._client_seq}", send)
        self.clients[client.cid] = client
        return client

    def drop_client(self, client: Client) -> None:
        self.clients.pop(client.cid, None)
        for session in self.sessions.values():
            session.subscribers.pop(client.cid, None)

    # -- message dispatch ----------------------------------------------------

    async def handle(self, client: Client, msg: dict) -> dict:
        mtype = msg.get("type")
        handler = {
            "create_session": self._create_session,
            "get_observation": self._get_observation,
            "get_case": self._get_case,
            "act": self._act,
            "advance": self._advance,
            "simulate": self._simulate,
            "n1_screen": self._n1_screen,
            "subscribe": self._subscribe,
            "transfer_authority": self._transfer_authority,
        }.get(mtype)
        if handler is None:
            raise ProtocolError(f"unknown message type {mtype!r}")
        return await handler(client, msg)

    def _session(self, msg: dict) -> Session:
        sid = msg.get("session")
        session = self.sessions.get(sid)
        if session is None:
            raise ProtocolError(f"unknown session {sid!r}")
        return session

    def _require_authority(self, session: Session, client: Client) -> None:
        if session.authority != client.cid:
            raise ProtocolError("not step authority")

    async def _create_session(self, client: Client, msg: dict) -> dict:
        episode = msg.get("episode")
        if episode is None:
            episode = next(iter(self.episodes))
        if episode not in self.episodes:
            raise ProtocolError(
                f"unknown episode {episode!r}; available: {sorted(self.episodes)}"
            )
        seed = int(msg.get("seed", self.default_seed))
        chron = load_chronics(self.episodes[episode])
        env = GridEnv(self.case, chron, config=self.config, seed=seed)
        obs = env.reset()

        self._session_seq += 1
        sid = f"s{self._session_seq}"
        header = {
            "type": "header",
            "format": "gridgym-episode-v1",
            "case_id": self.case.id,
            "case_path": str(self.case_path),
            "chronics_id": episode,
            "chronics_path": str(self.episodes[episode]),
            "agent": "console",
            "seed": seed,
            "config": self.config.to_dict(),
            "config_hash": episode_config_hash(self.config, self.case, chron),
        }
        log = EpisodeLog(header=header, steps=[])
        session = Session(sid, env, episode, log, self.log_dir / f"{sid}.jsonl")
        session.authority = client.cid
        self.sessions[sid] = session
        session.log_path.write_text(canonical_json(header) + "\n")

        return {
            "type": "session_created",
            "session": sid,
            "client_id": client.cid,
            "episode": episode,
            "seed": seed,
            "authority": client.cid,
            "case": self.case_doc,
            "config": self.config.to_dict(),
            "observation": observation_to_dict(obs),
            "log_path": str(session.log_path),
        }

    async def _get_observation(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        env = session.env
        return {
            "type": "observation",
            "session": session.sid,
            "t": env.t,
            "done": env.done,
            "termination": env.termination,
            "observation": observation_to_dict(env.observation),
        }

    async def _get_case(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        return {"type": "case", "session": session.sid, "case": self.case_doc}

    async def _act(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        self._require_authority(session, client)
        action = _parse_action(msg)
        reason = check_legal(self.case, session.env.observation, action)
        if reason is None:
            session.pending = action
            return {"type": "act_ack", "session": session.sid, "applied": "staged"}
        session.pending = Action()
        return {
            "type": "act_ack",
            "session": session.sid,
            "applied": "do_nothing",
            "illegal_reason": reason,
        }

    async def _advance(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        self._require_authority(session, client)
        async with session.lock:
            env = session.env
            if env.done:
                raise ProtocolError(f"episode ended with {env.termination!r}")
            action = session.pending
            session.pending = Action()
            result = env.step(action)
            record = step_record(env.t, action, result)
            session.log.steps.append(record)
            session.append_record(record)
            if result.done and not session.ended:
                session.ended = True
                end = {
                    "type": "end",
                    "termination": env.termination,
                    "steps": len(session.log.steps),
                    "score": 0.0,
                }
                session.log.end = end
                end["score"] = episode_score(session.log, self.config.reward)
                session.append_record(end)
            payload = _result_payload(session, result)
        for subscriber in list(session.subscribers.values()):
            await subscriber.push({**payload, "type": "state_push"})
        return {**payload, "type": "step_result"}

    async def _simulate(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        if session.env.done:
            raise ProtocolError(f"episode ended with {session.env.termination!r}")
        action = _parse_action(msg)
        result = session.env.simulate(action)
        return {**_result_payload(session, result), "type": "sim_result"}

    async def _n1_screen(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        return {
            "type": "n1_report",
            "session": session.sid,
            "rows": session.env.n1_screen(),
        }

    async def _subscribe(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        session.subscribers[client.cid] = client
        return {"type": "subscribed", "session": session.sid}

    async def _transfer_authority(self, client: Client, msg: dict) -> dict:
        session = self._session(msg)
        self._require_authority(session, client)
        target = msg.get("to")
        if target not in self.clients:
            raise ProtocolError(f"unknown client {target!r}")
        session.authority = target
        return {"type": "authority", "session": session.sid, "authority": target}


class ProtocolError(GridGymError):
    pass


def _parse_action(msg: dict) -> Action:
    doc = msg.get("action")
    if doc is None:
        return Action()
    if not isinstance(doc, dict):
        raise ProtocolError("action must be an object")
    try:
        return action_from_dict(doc)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ProtocolError(f"malformed action: {exc}") from exc


def _result_payload(session: Session, result) -> dict:
    return {
        "session": session.sid,
        "t": result.observation.timestep,
        "observation": observation_to_dict(result.observation),
        "reward": result.reward,
        "done": result.done,
        "termination": result.termination,
        "info": result.info,
        "score_so_far": _score_so_far(session),
    }


def _score_so_far(session: Session) -> float:
    gamma = session.env.config.reward.gamma
    total, factor = 0.0, 1.0
    for rec in session.log.steps:
        total += factor * rec["reward"]
        factor *= gamma
    return total


async def _dispatch_text(hub: Hub, client: Client, text: str) -> dict:
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as exc:
        return {"type": "error", "message": f"not valid JSON: {exc}"}
    if not isinstance(msg, dict):
        return {"type": "error", "message": "message must be a JSON object"}
    corr = msg.get("corr_id")
    try:
        response = await hub.handle(client, msg)
    except ProtocolError as exc:
        response = {"type": "error", "message": str(exc)}
    except (EpisodeFinished, GridGymError) as exc:
        response = {"type": "error", "message": str(exc)}
    if corr is not None:
        response["corr_id"] = corr
    return response


def _hello(client: Client) -> dict:
    return {"type": "hello", "client_id": client.cid, "protocol": PROTOCOL_VERSION}


async def ws_handler(request: web.Request) -> web.WebSocketResponse:
    hub: Hub = request.app[HUB_KEY]
    ws = web.WebSocketResponse(heartbeat=30)
    await ws.prepare(request)

    async def send(message: dict) -> None:
        await ws.send_str(canonical_json(message))

    client = hub.register_client(send)
    await send(_hello(client))
    try:
        async for frame in ws:
            if frame.type == WSMsgType.TEXT:
                await send(await _dispatch_text(hub, client, frame.data))
            elif frame.type == WSMsgType.ERROR:
                break
    finally:
        hub.drop_client(client)
    return ws


async def tcp_handler(hub: Hub, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
    async def send(message: dict) -> None:
        writer.write((canonical_json(message) + "\n").encode())
        await writer.drain()

    client = hub.register_client(send)
    await send(_hello(client))
    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            text = line.decode().strip()
            if not text:
                continue
            await send(await _dispatch_text(hub, client, text))
    except (ConnectionError, asyncio.IncompleteReadError):
        pass
    finally:
        hub.drop_client(client)
        writer.close()


def build_app(hub: Hub, console_dir: Path | None) -> web.Application:
    app = web.Application()
    app[HUB_KEY] = hub
    app.router.add_get("/ws", ws_handler)
    if console_dir and console_dir.exists():
        async def index(_request):
            return web.FileResponse(console_dir / "index.html")

        app.router.add_get("/", index)
        app.router.add_static("/", console_dir)
    else:
        async def index(_request):
            return web.Response(
                text="gridgym service: connect a client to /ws "
                     "(no console bundle found)\n",
                content_type="text/plain",
            )

        app.router.add_get("/", index)
    return app


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)


def serve(args) -> int:
    from .cli import load_config

    config = load_config(args.config)
    hub = Hub(
        case_path=Path(args.case),
        chronics_root=Path(args.chronics),
        config=config,
        log_dir=Path(args.log_dir),
        default_seed=args.seed,
    )
    console_dir = Path(args.console) if args.console else Path("frontend/dist")
    host, port = _parse_bind(args.bind)
    if args.tcp_bind:
        tcp_host, tcp_port = _parse_bind(args.tcp_bind)
    else:
        tcp_host, tcp_port = host, (port + 1 if port else 0)

    async def run() -> None:
        runner = web.AppRunner(build_app(hub, console_dir))
        await runner.setup()
        site = web.TCPSite(runner, host, port)
        await site.start()
        http_port = runner.addresses[0][1]

        server = await asyncio.start_server(
            lambda r, w: tcp_handler(hub, r, w), tcp_host, tcp_port
        )
        actual_tcp = server.sockets[0].getsockname()[1]
        print(
            f"gridgym service listening http={host}:{http_port} "
            f"tcp={tcp_host}:{actual_tcp}",
            flush=True,
        )
        async with server:
            await asyncio.Event().wait()  # run until cancelled

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        pass
    return 0
