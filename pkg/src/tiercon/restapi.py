"""HTTP and TCP front ends for the security manager.

REST routes (JSON bodies; mutating routes require ``X-Auth-Token`` holding
the operator token or the device owner's credential):

* ``GET  /devices`` -- fleet summary.
* ``GET  /devices/{id}`` -- one device view.
* ``GET  /devices/{id}/trace`` -- transition trace as JSON lines.
* ``POST /devices/{id}/trigger`` -- body ``{kind, level?, confirm?}``.
* ``POST /devices/{id}/ack`` -- body ``{credential}``.
* ``POST /devices/{id}/files/delete`` -- body ``{names: [...]}``.
* ``GET  /policies/{id}`` -- ``{policy, revision}``.
* ``PUT  /policies/{id}`` -- store a policy document; optional
  ``?expected_revision=N`` guards against concurrent edits.

Status codes: 401 unauthenticated, 403 refused (missing level-1
confirmation), 404 unknown device/policy, 409 revision conflict, 422
validation failure (body carries the report), 400 anything else the device
or manager rejected.

Responses carry permissive CORS headers so the browser console can poll from
a dev server origin. TLS is a deployment concern: put the server behind a
terminating proxy if the link needs protection.

The same module hosts the agent-facing TCP listener (length-prefixed
envelope frames) and can run simulated in-process devices for desk demos,
advanced once per second by a ticker thread.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any
from urllib.parse import parse_qs, urlparse

from tiercon.agent import AgentConfig, SecurityAgent
from tiercon.device import ActionError
from tiercon.escalation import ControlMode
from tiercon.manager import (
    AuthError,
    ManagerError,
    OrgPolicyViolation,
    SecurityManager,
)
from tiercon.policy import PolicyError, SecurityPolicy, canonical_json, policy_from_doc
from tiercon.protocol import (
    Envelope,
    FrameDecoder,
    ProtocolError,
    decode_payload,
    encode_envelope,
)


class ManagerHub:
    """Shared state for the HTTP and TCP fronts: the manager, a lock that
    serializes every mutation, live agent connections, and optional
    in-process simulated agents."""

    def __init__(self, manager: SecurityManager):
        self.manager = manager
        self.lock = threading.RLock()
        self.connections: dict[str, Any] = {}
        self.sim_agents: dict[str, SecurityAgent] = {}
        manager.transport = self._transport

    def _transport(self, device_id: str, env: Envelope) -> bool:
        agent = self.sim_agents.get(device_id)
        if agent is not None:
            agent.handle_envelope(env, self.manager.clock())
            return True
        conn = self.connections.get(device_id)
        if conn is None:
            return False
        try:
            conn.sendall(encode_envelope(env))
            return True
        except OSError:
            self.connections.pop(device_id, None)
            return False

    def attach_sim_agent(self, config: AgentConfig, policy: SecurityPolicy, now: int) -> SecurityAgent:
        def send_up(env: Envelope) -> None:
            replies = self.manager.handle_agent_message(env)
            agent = self.sim_agents[env.device_id]
            for reply in replies:
                agent.handle_envelope(reply, self.manager.clock())

        agent = SecurityAgent(
            config,
            policy,
            now=now,
            mode=ControlMode.SERVER_CONTROLLED,
            send=send_up,
            hybrid=True,
        )
        self.sim_agents[config.device_id] = agent
        return agent

    def tick_sim_agents(self, now: int) -> None:
        with self.lock:
            for device_id in sorted(self.sim_agents):
                self.sim_agents[device_id].advance(now)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    hub: ManagerHub  # set by server factory

    # -- plumbing -------------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, X-Auth-Token")

    def _reply(self, code: int, doc: Any, content_type: str = "application/json") -> None:
        payload = (
            doc.encode("utf-8")
            if isinstance(doc, str)
            else (canonical_json(doc) + "\n").encode("utf-8")
        )
        self.send_response(code)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(payload)
        self.close_connection = True

    def _body(self) -> Any:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ValueError("request body is not valid JSON") from None

    def _auth(self) -> str | None:
        return self.headers.get("X-Auth-Token")

    # -- verbs ------------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")

    def do_PUT(self):
        self._route("PUT")

    def _route(self, verb: str) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        hub = self.hub
        try:
            with hub.lock:
                if verb == "GET" and parts == ["devices"]:
                    views = [hub.manager.db.devices[d].view() for d in sorted(hub.manager.db.devices)]
                    return self._reply(200, {"devices": views})
                if verb == "GET" and len(parts) == 2 and parts[0] == "devices":
                    return self._reply(200, hub.manager.device(parts[1]).view())
                if verb == "GET" and len(parts) == 3 and parts[0] == "devices" and parts[2] == "trace":
                    record = hub.manager.device(parts[1])
                    lines = "\n".join(canonical_json(r) for r in record.trace)
                    return self._reply(200, lines + ("\n" if lines else ""), "application/x-ndjson")
                if verb == "POST" and len(parts) == 3 and parts[0] == "devices" and parts[2] == "trigger":
                    body = self._body()
                    result = hub.manager.remote_trigger(
                        parts[1],
                        body.get("kind", ""),
                        auth=self._auth(),
                        level=body.get("level"),
                        confirm=body.get("confirm"),
                    )
                    return self._reply(200, result)
                if verb == "POST" and len(parts) == 3 and parts[0] == "devices" and parts[2] == "ack":
                    body = self._body()
                    result = hub.manager.remote_ack(parts[1], body.get("credential", ""))
                    return self._reply(200, result)
                if (
                    verb == "POST"
                    and len(parts) == 4
                    and parts[0] == "devices"
                    and parts[2:] == ["files", "delete"]
                ):
                    body = self._body()
                    result = hub.manager.remote_file_delete(
                        parts[1], body.get("names", []), auth=self._auth()
                    )
                    return self._reply(200, result)
                if verb == "GET" and len(parts) == 2 and parts[0] == "policies":
                    policy, revision = hub.manager.get_policy(parts[1])
                    return self._reply(200, {"policy": policy.to_doc(), "revision": revision})
                if verb == "PUT" and len(parts) == 2 and parts[0] == "policies":
                    if self._auth() != hub.manager.operator_token:
                        return self._reply(401, {"error": "operator token required"})
                    body = self._body()
                    policy = policy_from_doc(body)
                    if policy.id != parts[1]:
                        return self._reply(400, {"error": f"policy id {policy.id!r} does not match URL"})
                    query = parse_qs(url.query)
                    expected = query.get("expected_revision")
                    expected_revision = int(expected[0]) if expected else None
                    try:
                        report, revision = hub.manager.set_policy(policy, expected_revision)
                    except ManagerError as exc:
                        return self._reply(409, {"error": str(exc)})
                    if not report.valid:
                        return self._reply(422, {"stored": False, "report": report.to_doc()})
                    return self._reply(200, {"stored": True, "revision": revision, "report": report.to_doc()})
            self._reply(404, {"error": f"no route for {verb} {url.path}"})
        except AuthError as exc:
            code = 403 if "confirmation" in str(exc) else 401
            self._reply(code, {"error": str(exc)})
        except OrgPolicyViolation as exc:
            self._reply(422, {"error": str(exc), "report": exc.report.to_doc()})
        except (ActionError, PolicyError, ProtocolError, ValueError) as exc:
            self._reply(400, {"error": str(exc)})
        except ManagerError as exc:
            code = 404 if "no such" in str(exc) else 400
            self._reply(code, {"error": str(exc)})


def make_rest_server(hub: ManagerHub, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"hub": hub})
    return ThreadingHTTPServer((host, port), handler)


class _AgentConnection(socketserver.BaseRequestHandler):
    """One agent's TCP session: split frames, decode envelopes, route them to
    the manager, write replies. Malformed envelopes get an error frame and
    the connection stays up; framing violations drop the connection."""

    def handle(self):
        hub: ManagerHub = self.server.hub  # type: ignore[attr-defined]
        decoder = FrameDecoder()
        device_id = None
        while True:
            try:
                data = self.request.recv(65536)
            except OSError:
                break
            if not data:
                break
            try:
                frames = decoder.feed(data)
            except ProtocolError:
                break
            for frame in frames:
                try:
                    env = decode_payload(frame)
                    with hub.lock:
                        device_id = env.device_id
                        hub.connections[device_id] = self.request
                        replies = hub.manager.handle_agent_message(env)
                    for reply in replies:
                        self.request.sendall(encode_envelope(reply))
                except ProtocolError as exc:
                    error = canonical_json({"error": str(exc)}).encode("utf-8")
                    try:
                        self.request.sendall(len(error).to_bytes(4, "big") + error)
                    except OSError:
                        return
        if device_id is not None:
            with hub.lock:
                if hub.connections.get(device_id) is self.request:
                    del hub.connections[device_id]


class AgentServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, hub: ManagerHub, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _AgentConnection)
        self.hub = hub


class LiveAgentClient:
    """`tiercon agent`: a simulated device driven by wall-clock seconds,
    attached to a remote manager over TCP."""

    def __init__(self, config: AgentConfig, policy: SecurityPolicy, manager_addr: tuple[str, int]):
        self._sock = socket.create_connection(manager_addr)
        self._decoder = FrameDecoder()
        self._start = time.monotonic()
        self._stop = threading.Event()
        self.agent = SecurityAgent(
            config,
            policy,
            now=0,
            mode=ControlMode.SERVER_CONTROLLED,
            send=lambda env: self._sock.sendall(encode_envelope(env)),
            record=lambda rec: print(canonical_json(rec), flush=True),
            hybrid=True,
        )

    def _now(self) -> int:
        return int(time.monotonic() - self._start)

    def run_forever(self) -> None:
        self._sock.settimeout(0.5)
        while not self._stop.is_set():
            try:
                data = self._sock.recv(65536)
                if not data:
                    break
                for frame in self._decoder.feed(data):
                    env = decode_payload(frame)
                    self.agent.handle_envelope(env, self._now())
            except socket.timeout:
                pass
            except ProtocolError as exc:
                print(canonical_json({"error": str(exc)}), flush=True)
            self.agent.advance(self._now())

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
