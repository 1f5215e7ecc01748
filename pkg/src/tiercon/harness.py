"""Deterministic scenario runner.

A scenario is a timed script against one manager and any number of simulated
devices, all driven by one virtual clock in a single process. The scheduler
steps the clock to exactly the instants where something is due (state-machine
timers, heartbeats, acknowledgment prompts, connectivity-loss detection) and
delivers envelopes over an in-memory network with zero latency and strict
FIFO ordering, so the same scenario always produces a byte-identical trace.

Network loss is modeled by suppressing delivery, never by teleporting mode
changes: agents notice silence through their own heartbeat window, exactly
as they would against a real server.

Directive reference (each entry carries a non-decreasing virtual time ``t``):

* ``advance_to`` -- just run the clock forward to ``t``.
* ``remote_trigger`` -- operator fires a trigger: ``device``, ``kind``,
  optional ``level`` and ``confirm``.
* ``ack`` -- user answers the acknowledgment prompt: ``device``,
  ``credential``.
* ``reset`` -- owner stand-down: ``device``, ``credential``.
* ``network_down`` / ``network_up`` -- suppress or restore all delivery.
* ``inject_file`` -- add a file: ``device``, ``name``, ``text`` or
  ``bytes_b64``, ``sensitive``.
* ``file_delete`` -- the web-supplied list: ``device``, ``names``.
* ``set_policy`` -- operator edits the stored policy mid-run: ``policy``.
* ``push_config`` -- explicit config push: ``device``.
* ``expect`` -- assert observable state: ``device`` plus any of ``level``,
  ``mode``, ``ringer``, ``lock``, ``file_count``, ``recover`` ({``text`` or
  ``needle_b64``, ``op`` in eq/ge, ``count``}).
"""

from __future__ import annotations

import base64
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any

from tiercon.agent import AgentConfig, SecurityAgent
from tiercon.crypto import hash_credential
from tiercon.escalation import ControlMode
from tiercon.manager import AccountRecord, DeviceRecord, SecurityManager
from tiercon.policy import (
    OrgPolicy,
    SecurityPolicy,
    build_default_policy,
    org_from_doc,
    policy_from_doc,
)
from tiercon.protocol import Envelope
from tiercon.trace import Trace, envelope_record, meta_record

DIRECTIVES = {
    "advance_to",
    "remote_trigger",
    "ack",
    "reset",
    "network_down",
    "network_up",
    "inject_file",
    "file_delete",
    "set_policy",
    "push_config",
    "expect",
}


class ScenarioError(Exception):
    pass


class ExpectationError(Exception):
    def __init__(self, t: int, device_id: str, field_name: str, got: Any, want: Any):
        super().__init__(
            f"expectation failed at t={t} device={device_id}: {field_name} is {got!r}, expected {want!r}"
        )
        self.t = t
        self.device_id = device_id
        self.field = field_name
        self.got = got
        self.want = want


@dataclass
class ScenarioDevice:
    config: AgentConfig
    owner_user: str
    owner_credential: str
    mode: ControlMode = ControlMode.SERVER_CONTROLLED
    hybrid: bool = True


@dataclass
class Scenario:
    seed: Any = 0
    policy: SecurityPolicy = field(default_factory=build_default_policy)
    org: OrgPolicy = field(default_factory=OrgPolicy)
    devices: list[ScenarioDevice] = field(default_factory=list)
    script: list[dict[str, Any]] = field(default_factory=list)
    operator_token: str = "operator-token"
    confirm_token: str = "CONFIRM-WIPE"

    @classmethod
    def from_doc(cls, doc: Any) -> "Scenario":
        if not isinstance(doc, dict):
            raise ScenarioError("scenario must be a JSON object")
        policy_doc = doc.get("policy", "default")
        policy = build_default_policy() if policy_doc == "default" else policy_from_doc(policy_doc)
        org = org_from_doc(doc.get("org", {}))

        devices = []
        for entry in doc.get("devices", []):
            if "device_id" not in entry:
                raise ScenarioError("device entry missing device_id")
            credential = entry.get("owner_credential", "owner-secret")
            files = []
            for f in entry.get("files", []):
                if "text" in f:
                    content = f["text"].encode("utf-8")
                elif "bytes_b64" in f:
                    content = base64.b64decode(f["bytes_b64"])
                else:
                    raise ScenarioError(f"file entry {f.get('name')!r} needs text or bytes_b64")
                files.append((f["name"], content, bool(f.get("sensitive", False))))
            heartbeat = entry.get("heartbeat", {})
            config = AgentConfig(
                device_id=entry["device_id"],
                owner_credential_hash=hash_credential(credential),
                key_hex=entry.get("key", "11" * 32),
                heartbeat_interval_s=heartbeat.get("interval_s", 30),
                missed_threshold=heartbeat.get("missed_threshold", 3),
                push_signals_enabled=heartbeat.get("push_signals_enabled", True),
                files=files,
                position=tuple(entry.get("position", (35.79, -78.78))),
            )
            devices.append(
                ScenarioDevice(
                    config=config,
                    owner_user=entry.get("owner_user", f"owner-{entry['device_id']}"),
                    owner_credential=credential,
                    mode=ControlMode(entry.get("mode", "ServerControlled")),
                    hybrid=bool(entry.get("hybrid", True)),
                )
            )

        script = list(doc.get("script", []))
        last_t = 0
        for i, directive in enumerate(script):
            if "t" not in directive or "do" not in directive:
                raise ScenarioError(f"script[{i}] needs t and do")
            if directive["do"] not in DIRECTIVES:
                raise ScenarioError(f"script[{i}]: unknown directive {directive['do']!r}")
            if directive["t"] < last_t:
                raise ScenarioError(f"script[{i}]: time goes backwards ({directive['t']} < {last_t})")
            last_t = directive["t"]

        return cls(
            seed=doc.get("seed", 0),
            policy=policy,
            org=org,
            devices=devices,
            script=script,
            operator_token=doc.get("operator_token", "operator-token"),
            confirm_token=doc.get("confirm_token", "CONFIRM-WIPE"),
        )

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(
                    f"malformed scenario at line {exc.lineno} column {exc.colno}: {exc.msg}"
                ) from None
        return cls.from_doc(doc)


class Simulation:
    """One manager, its agents, the in-memory network, and the virtual clock."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.now = 0
        self.network_up = True
        self.trace = Trace([meta_record(seed=scenario.seed)])
        self._pending: deque[tuple[str, Envelope]] = deque()
        #: Every envelope that reached the wire, with full bodies; lets tests
        #: audit protocol content that the trace only summarizes.
        self.envelope_log: list[tuple[str, Envelope]] = []

        self.manager = SecurityManager(
            operator_token=scenario.operator_token,
            confirm_token=scenario.confirm_token,
            clock=lambda: self.now,
            transport=self._transport_to_device,
        )
        self.manager.set_org_policy(scenario.org)
        report, _ = self.manager.set_policy(scenario.policy)
        if not report.valid:
            raise ScenarioError("scenario policy fails org validation:\n" + report.summary())

        self.agents: dict[str, SecurityAgent] = {}
        self._hybrid: dict[str, bool] = {}
        for dev in scenario.devices:
            user = dev.owner_user
            if user not in self.manager.db.accounts:
                self.manager.register_account(
                    AccountRecord(user, hash_credential(dev.owner_credential))
                )
            self.manager.register_device(
                DeviceRecord(dev.config.device_id, user, scenario.policy.id, mode=dev.mode.value)
            )
            agent = SecurityAgent(
                dev.config,
                scenario.policy,
                now=0,
                mode=dev.mode,
                send=self._send_to_server,
                record=self.trace.append,
                hybrid=dev.hybrid,
                rng_seed=f"{scenario.seed}:{dev.config.device_id}",
            )
            self.agents[dev.config.device_id] = agent
            self._hybrid[dev.config.device_id] = dev.hybrid

        for dev in scenario.devices:
            if dev.hybrid:
                self.manager.push_config(dev.config.device_id)
        self._drain()

    # -- network ---------------------------------------------------------------

    def _transport_to_device(self, device_id: str, env: Envelope) -> bool:
        if not self.network_up or not self._hybrid.get(device_id, False):
            return False
        self.trace.append(envelope_record(self.now, "to_device", env))
        self.envelope_log.append(("to_device", env))
        self._pending.append(("to_device", env))
        return True

    def _send_to_server(self, env: Envelope) -> None:
        record = envelope_record(env.sent_at, "to_server", env)
        if not self.network_up:
            record["dropped"] = True
            self.trace.append(record)
            return
        self.trace.append(record)
        self.envelope_log.append(("to_server", env))
        self._pending.append(("to_server", env))

    def _drain(self) -> None:
        while self._pending:
            direction, env = self._pending.popleft()
            if direction == "to_server":
                replies = self.manager.handle_agent_message(env)
                for reply in replies:
                    self._transport_to_device(env.device_id, reply)
            else:
                self.agents[env.device_id].handle_envelope(env, self.now)

    # -- clock -----------------------------------------------------------------

    def _advance_to(self, target: int) -> None:
        if target < self.now:
            raise ScenarioError(f"cannot advance backwards to {target} from {self.now}")
        while True:
            wakeups = [a.next_wakeup() for a in self.agents.values()]
            wakeups = [w for w in wakeups if w is not None]
            if not wakeups:
                break
            tnext = min(wakeups)
            if tnext > target:
                break
            if tnext < self.now:
                raise ScenarioError(f"scheduler regression: wakeup {tnext} before now {self.now}")
            self.now = tnext
            for device_id in sorted(self.agents):
                self.agents[device_id].advance(tnext)
                self._drain()
        self.now = target
        for device_id in sorted(self.agents):
            self.agents[device_id].advance(target)
            self._drain()

    # -- directives ---------------------------------------------------------------

    def _apply(self, directive: dict[str, Any]) -> None:
        what = directive["do"]
        if what == "advance_to":
            return
        if what == "network_down":
            self.network_up = False
            return
        if what == "network_up":
            self.network_up = True
            return
        if what == "set_policy":
            policy = policy_from_doc(directive["policy"])
            report, _ = self.manager.set_policy(policy)
            if not report.valid:
                raise ScenarioError(f"set_policy at t={self.now} rejected:\n" + report.summary())
            return
        if what == "push_config":
            self.manager.push_config(directive["device"])
            self._drain()
            return

        device_id = directive.get("device")
        if device_id not in self.agents:
            raise ScenarioError(f"directive references unknown device {device_id!r}")
        agent = self.agents[device_id]

        if what == "remote_trigger":
            self.manager.remote_trigger(
                device_id,
                directive["kind"],
                auth=self.scenario.operator_token,
                level=directive.get("level"),
                confirm=directive.get("confirm"),
            )
            self._drain()
        elif what == "ack":
            agent.submit_ack(directive.get("credential", ""), self.now)
            self._drain()
        elif what == "reset":
            agent.authorized_reset(directive.get("credential", ""), self.now)
            self._drain()
        elif what == "inject_file":
            if "text" in directive:
                content = directive["text"].encode("utf-8")
            else:
                content = base64.b64decode(directive["bytes_b64"])
            agent.inject_file(directive["name"], content, bool(directive.get("sensitive", False)), self.now)
            self._drain()
        elif what == "file_delete":
            self.manager.remote_file_delete(
                device_id, directive["names"], auth=self.scenario.operator_token
            )
            self._drain()
        elif what == "expect":
            self._check_expect(directive, agent)
        else:  # pragma: no cover - guarded by Scenario validation
            raise ScenarioError(f"unknown directive {what!r}")

    def _check_expect(self, directive: dict[str, Any], agent: SecurityAgent) -> None:
        t, device_id = self.now, agent.device_id

        def check(field_name: str, got: Any, want: Any) -> None:
            if got != want:
                raise ExpectationError(t, device_id, field_name, got, want)

        if "level" in directive:
            check("level", agent.level, directive["level"])
        if "mode" in directive:
            check("mode", agent.mode.value, directive["mode"])
        if "ringer" in directive:
            check("ringer", agent.device.functions.ringer_active, directive["ringer"])
        if "lock" in directive:
            check("lock", agent.device.functions.lock.value, directive["lock"])
        if "file_count" in directive:
            check("file_count", len(agent.device.storage.files), directive["file_count"])
        if "recover" in directive:
            spec = directive["recover"]
            if "text" in spec:
                needle = spec["text"].encode("utf-8")
            else:
                needle = base64.b64decode(spec["needle_b64"])
            count = len(agent.device.recover_scan(needle))
            op = spec.get("op", "eq")
            want = spec.get("count", 0)
            if op == "eq":
                check("recover_count", count, want)
            elif op == "ge":
                if not count >= want:
                    raise ExpectationError(t, device_id, "recover_count", count, f">= {want}")
            else:
                raise ScenarioError(f"unknown recover op {op!r}")

    # -- entry point ------------------------------------------------------------

    def run(self) -> Trace:
        for directive in self.scenario.script:
            self._advance_to(directive["t"])
            self._apply(directive)
        return self.trace


def run_scenario(scenario: Scenario) -> Trace:
    return Simulation(scenario).run()
