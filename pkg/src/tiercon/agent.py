"""The device-resident security agent.

Normally the server steers: configuration arrives over the wire, remote
triggers move the escalation ladder, and the agent executes each entered
tier's actions against its device. The agent also watches connectivity by
heartbeating the server (responses and unsolicited pushes both count as
contact). When the silence window (heartbeat interval times missed
threshold) is exceeded, the agent takes control itself: it switches to
device-controlled mode and starts prompting the user for periodic
acknowledgments, escalating when none arrive. When contact resumes it
exchanges policy digests with the server, pulls fresh configuration if the
digests differ, and only then hands control back, which also silences the
acknowledgment prompts. A device can also run standalone (no server at all);
that is simply device-controlled mode from the start.

Driving model: an owner (the harness scheduler or the live socket loop)
calls ``advance(now)`` at each instant the agent reported via
``next_wakeup()``, delivers envelopes through ``handle_envelope``, and
forwards user interactions to ``submit_ack`` / ``authorized_reset``. The
agent never reads a wall clock.
"""

from __future__ import annotations

import base64
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from tiercon import crypto, escalation, trace
from tiercon.device import SimDevice
from tiercon.escalation import (
    ActionCommand,
    ControlMode,
    DeviceState,
    Event,
    EventKind,
    Transition,
)
from tiercon.policy import SecurityPolicy, compile_policy, policy_from_doc
from tiercon.protocol import Envelope, MsgType, ProtocolError, SequenceTracker
from tiercon.storage import SimStorage


class AgentError(Exception):
    pass


class Connectivity(str, Enum):
    CONNECTED = "Connected"
    LOST = "Lost"


@dataclass
class ConnectivityMonitor:
    """Declares loss when the server has been silent longer than
    ``heartbeat_interval_s * missed_threshold`` seconds. The boundary is
    inclusive on the connected side: silence of exactly the window is still
    Connected."""

    heartbeat_interval_s: int = 30
    missed_threshold: int = 3
    last_server_contact: int = 0
    push_signals_enabled: bool = True

    @property
    def window(self) -> int:
        return self.heartbeat_interval_s * self.missed_threshold

    def note_contact(self, now: int) -> None:
        self.last_server_contact = max(self.last_server_contact, now)

    def status(self, now: int) -> Connectivity:
        if now - self.last_server_contact > self.window:
            return Connectivity.LOST
        return Connectivity.CONNECTED

    def lost_at(self) -> int:
        """First instant at which status() reports Lost."""
        return self.last_server_contact + self.window + 1


def check_connectivity(monitor: ConnectivityMonitor, now: int) -> Connectivity:
    return monitor.status(now)


@dataclass
class AgentConfig:
    device_id: str
    owner_credential_hash: str
    key_hex: str | None = None
    heartbeat_interval_s: int = 30
    missed_threshold: int = 3
    push_signals_enabled: bool = True
    files: list[tuple[str, bytes, bool]] = field(default_factory=list)
    position: tuple[float, float] = (35.79, -78.78)

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "AgentConfig":
        if "device_id" not in doc:
            raise AgentError("agent config missing device_id")
        if "owner_credential_hash" not in doc:
            raise AgentError("agent config missing owner_credential_hash")
        heartbeat = doc.get("heartbeat", {})
        files = []
        for entry in doc.get("files", []):
            try:
                content = base64.b64decode(entry["bytes_b64"])
            except Exception as exc:
                raise AgentError(f"bad file entry {entry.get('name')!r}: {exc}") from None
            files.append((entry["name"], content, bool(entry.get("sensitive", False))))
        position = tuple(doc.get("position", (35.79, -78.78)))
        return cls(
            device_id=doc["device_id"],
            owner_credential_hash=doc["owner_credential_hash"],
            key_hex=doc.get("key"),
            heartbeat_interval_s=heartbeat.get("interval_s", 30),
            missed_threshold=heartbeat.get("missed_threshold", 3),
            push_signals_enabled=heartbeat.get("push_signals_enabled", True),
            files=files,
            position=position,  # type: ignore[arg-type]
        )

    @classmethod
    def load(cls, path: str) -> "AgentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))


_TRIGGER_EVENT_KINDS = {
    "RemoteCall": EventKind.REMOTE_CALL,
    "RemoteText": EventKind.REMOTE_TEXT,
    "RemoteEmail": EventKind.REMOTE_EMAIL,
    "SensitiveDataReceived": EventKind.SENSITIVE_DATA_RECEIVED,
}


class SecurityAgent:
    def __init__(
        self,
        config: AgentConfig,
        policy: SecurityPolicy,
        now: int,
        mode: ControlMode = ControlMode.SERVER_CONTROLLED,
        send: Callable[[Envelope], None] | None = None,
        record: Callable[[dict[str, Any]], None] | None = None,
        hybrid: bool = True,
        rng_seed: str | None = None,
    ):
        self.config = config
        self.device_id = config.device_id
        self._send = send or (lambda env: None)
        self._record = record or (lambda rec: None)
        self.hybrid = hybrid

        key = crypto.key_from_hex(config.key_hex) if config.key_hex else None
        self.device = SimDevice(
            config.device_id,
            storage=SimStorage(),
            position=config.position,
            enc_key=key,
            rng=random.Random(rng_seed or f"agent:{config.device_id}"),
        )
        for name, content, sensitive in config.files:
            self.device.inject_file(name, content, sensitive=sensitive)

        self.compiled = compile_policy(policy)
        self.state: DeviceState = escalation.init_state(self.compiled, now, mode, config.device_id)
        self.monitor = ConnectivityMonitor(
            heartbeat_interval_s=config.heartbeat_interval_s,
            missed_threshold=config.missed_threshold,
            last_server_contact=now,
            push_signals_enabled=config.push_signals_enabled,
        )
        self._out_seq = SequenceTracker()
        self._in_seq = SequenceTracker()
        self._unreported: list[dict[str, Any]] = []
        self._usage_counter = 0

        self.next_heartbeat_at: int | None = now + config.heartbeat_interval_s if hybrid else None
        self.next_prompt_at: int | None = None
        if mode is ControlMode.DEVICE_CONTROLLED:
            self.next_prompt_at = now
        # idle -> sent -> config_wait; timestamps allow retry after dropped replies
        self._sync_state = "idle"
        self._sync_sent_at = -1

    # -- properties ----------------------------------------------------------

    @property
    def mode(self) -> ControlMode:
        return self.state.control_mode

    @property
    def level(self) -> int:
        return self.state.level

    @property
    def digest(self) -> str:
        return self.compiled.digest

    # -- scheduling ------------------------------------------------------------

    def next_wakeup(self) -> int | None:
        """Earliest instant at which this agent has something to do."""
        candidates = []
        deadline = escalation.next_deadline(self.state)
        if deadline is not None:
            candidates.append(deadline)
        if self.next_heartbeat_at is not None:
            candidates.append(self.next_heartbeat_at)
        if self.next_prompt_at is not None:
            candidates.append(self.next_prompt_at)
        if self.hybrid and self.mode is ControlMode.SERVER_CONTROLLED:
            candidates.append(self.monitor.lost_at())
        return min(candidates) if candidates else None

    def advance(self, now: int) -> None:
        """Process everything due at or before ``now``, in deterministic
        order: connectivity loss, then escalation timers, then acknowledgment
        prompts, then heartbeat attempts."""
        if (
            self.hybrid
            and self.mode is ControlMode.SERVER_CONTROLLED
            and self.monitor.status(now) is Connectivity.LOST
        ):
            self._enter_device_control(self.monitor.lost_at(), "connectivity_lost")

        self.state, transitions, commands = escalation.advance_clock(self.state, now)
        for transition in transitions:
            self._after_transition(transition)
        for command in commands:
            self._execute(command, command.issued_at)
        if transitions:
            self._report(now)

        while self.next_prompt_at is not None and self.next_prompt_at <= now:
            at = self.next_prompt_at
            self.prompt_ack(at)
            self.next_prompt_at = at + self.compiled.ack_interval_seconds

        while self.next_heartbeat_at is not None and self.next_heartbeat_at <= now:
            at = self.next_heartbeat_at
            self._send_envelope(
                MsgType.HEARTBEAT,
                {"level": self.level, "mode": self.mode.value, "entered_at": self.state.level_entered_at},
                at,
            )
            self.next_heartbeat_at = at + self.config.heartbeat_interval_s

    # -- connectivity and failover ---------------------------------------------

    def _enter_device_control(self, at: int, reason: str) -> None:
        if self.mode is ControlMode.DEVICE_CONTROLLED:
            return
        self.state = escalation.set_control_mode(self.state, ControlMode.DEVICE_CONTROLLED, at)
        self._record(trace.mode_record(self.device_id, at, self.mode.value, reason))
        self.next_prompt_at = at
        self._sync_state = "idle"

    def _complete_restore(self, at: int) -> None:
        self.state = escalation.set_control_mode(self.state, ControlMode.SERVER_CONTROLLED, at)
        self._record(trace.mode_record(self.device_id, at, self.mode.value, "connectivity_restored"))
        self.next_prompt_at = None
        self._sync_state = "idle"

    def _maybe_start_sync(self, now: int) -> None:
        if not self.hybrid or self.mode is not ControlMode.DEVICE_CONTROLLED:
            return
        if self._sync_state != "idle" and self._sync_sent_at >= now:
            return  # a sync round is already in flight at this instant
        self._sync_state = "sent"
        self._sync_sent_at = now
        self._send_envelope(
            MsgType.SYNC_DIGEST,
            {"digest": self.digest, "level": self.level, "as_of": now},
            now,
        )

    # -- envelopes ----------------------------------------------------------------

    def _send_envelope(self, msg_type: MsgType, body: dict[str, Any], at: int) -> None:
        env = Envelope(msg_type, self.device_id, self._out_seq.next_send(), body, at)
        self._send(env)

    def handle_envelope(self, env: Envelope, now: int) -> None:
        """Deliver one server envelope. Duplicate sequence numbers are
        ignored idempotently; any accepted envelope counts as server
        contact."""
        if env.device_id != self.device_id:
            raise ProtocolError(f"envelope for {env.device_id!r} delivered to {self.device_id!r}")
        if not self._in_seq.accept(env.seq):
            return
        self.monitor.note_contact(now)

        handler = {
            MsgType.CONFIG_PUSH: self._on_config_push,
            MsgType.LEVEL_SET: self._on_level_set,
            MsgType.TRIGGER: self._on_trigger,
            MsgType.ACK_REQUEST: self._on_ack_request,
            MsgType.ACK: self._on_ack,
            MsgType.HEARTBEAT: self._on_heartbeat,
            MsgType.SYNC_DIGEST: self._on_sync_digest,
            MsgType.CANCEL_ALL: self._on_cancel_all,
        }.get(env.msg_type)
        if handler is None:
            raise ProtocolError(f"agent cannot handle {env.msg_type}")
        handler(env, now)

        if self.mode is ControlMode.DEVICE_CONTROLLED:
            self._maybe_start_sync(now)

    def _on_config_push(self, env: Envelope, now: int) -> None:
        policy = policy_from_doc(env.body.get("policy"))
        self.compiled = compile_policy(policy)
        self.state = escalation.swap_policy(self.state, self.compiled, now)
        level = env.body.get("level")
        if isinstance(level, int) and level < self.level:
            self._apply_level_set(level, now, "CONFIG_PUSH")
        if self._sync_state == "config_wait":
            self._complete_restore(now)

    def _on_level_set(self, env: Envelope, now: int) -> None:
        level = env.body.get("level")
        if isinstance(level, int) and level < self.level:
            self._apply_level_set(level, now, "LEVEL_SET")

    def _apply_level_set(self, level: int, now: int, cause: str) -> None:
        state, transition = escalation.forced_transition(self.state, level, now, cause)
        self.state = state
        self._after_transition(transition)
        self._report(now)

    def _on_trigger(self, env: Envelope, now: int) -> None:
        kind_name = env.body.get("kind")
        if kind_name == "FileDelete":
            names = env.body.get("names", [])
            deleted = self.device.delete_files(names)
            self._record(trace.file_delete_record(self.device_id, now, names, deleted))
            return
        kind = _TRIGGER_EVENT_KINDS.get(kind_name)
        if kind is None:
            raise ProtocolError(f"unsupported remote trigger kind {kind_name!r}")
        event = Event(kind, now, target_level=env.body.get("target_level"))
        self.deliver_event(event)

    def _on_ack_request(self, env: Envelope, now: int) -> None:
        self.prompt_ack(now)

    def _on_ack(self, env: Envelope, now: int) -> None:
        self.submit_ack(env.body.get("credential", ""), now)

    def _on_heartbeat(self, env: Envelope, now: int) -> None:
        pass  # contact already noted

    def _on_sync_digest(self, env: Envelope, now: int) -> None:
        if self.mode is not ControlMode.DEVICE_CONTROLLED:
            return
        if env.body.get("digest") == self.digest:
            self._complete_restore(now)
        else:
            self._sync_state = "config_wait"

    def _on_cancel_all(self, env: Envelope, now: int) -> None:
        self.authorized_reset(env.body.get("credential", ""), now)

    # -- escalation plumbing -----------------------------------------------------

    def deliver_event(self, event: Event) -> Transition | None:
        """Advance to the event instant (timers first), then apply it."""
        self.state, timer_transitions, commands = escalation.advance_clock(self.state, event.at)
        for transition in timer_transitions:
            self._after_transition(transition)
        for command in commands:
            self._execute(command, command.issued_at)
        self.state, transition = escalation.apply_event(self.state, event)
        if transition is not None:
            self._after_transition(transition)
        if timer_transitions or transition is not None:
            self._report(event.at)
        return transition

    def _after_transition(self, transition: Transition) -> None:
        self._record(trace.transition_record(self.device_id, transition))
        for command in transition.emitted_actions:
            self._execute(command, transition.at)
        self._unreported.append(transition.to_doc(self.device_id))

    def _execute(self, command: ActionCommand, at: int) -> None:
        result = self.device.execute_action(command, at)
        self._record(trace.action_record(self.device_id, at, command, result))

    def _report(self, now: int) -> None:
        """Ship pending transitions and usage entries to the server. The
        buffer is kept until contact is certain; the server deduplicates."""
        if not self.hybrid:
            return
        entries = []
        for entry in self.device.drain_usage():
            doc = entry.to_doc()
            doc["n"] = self._usage_counter
            self._usage_counter += 1
            entries.append(doc)
        if not entries and not self._unreported:
            return
        self._send_envelope(
            MsgType.USAGE_REPORT,
            {"entries": entries, "transitions": list(self._unreported)},
            now,
        )
        self._unreported = self._unreported[-50:]

    # -- user interactions ----------------------------------------------------------

    def prompt_ack(self, now: int) -> None:
        self._record(trace.prompt_record(self.device_id, now))

    def submit_ack(self, credential: str, now: int) -> bool:
        """A user response to the acknowledgment prompt. Valid credentials
        push the dead-man deadline out; invalid ones are recorded as failed
        credential entries (which a policy may treat as a trigger)."""
        if crypto.verify_credential(credential, self.config.owner_credential_hash):
            self._record(trace.ack_record(self.device_id, now, True))
            self.deliver_event(Event(EventKind.ACK_RECEIVED, now))
            if self.hybrid:
                self._send_envelope(MsgType.ACK, {"at": now}, now)
            return True
        self._record(trace.ack_record(self.device_id, now, False))
        self.deliver_event(Event(EventKind.CREDENTIAL_ENTRY, now, {"success": False}))
        return False

    def authorized_reset(self, credential: str, now: int) -> bool:
        """Owner-initiated stand-down to level 5. Wiped storage stays wiped."""
        try:
            state, transition, cancel = escalation.authorized_reset(
                self.state, credential, self.config.owner_credential_hash, now
            )
        except crypto.CredentialError:
            self._record(trace.ack_record(self.device_id, now, False))
            self.deliver_event(Event(EventKind.CREDENTIAL_ENTRY, now, {"success": False}))
            return False
        self.state = state
        self.device.functions.ringer_active = False
        self.device.functions.ringer_interval_s = None
        self._record(trace.transition_record(self.device_id, transition))
        self._record(trace.cancel_record(self.device_id, cancel.issued_at))
        self._unreported.append(transition.to_doc(self.device_id))
        self._report(now)
        if self.mode is ControlMode.DEVICE_CONTROLLED:
            self.next_prompt_at = now + self.compiled.ack_interval_seconds
        return True

    def receive_sensitive_data(self, name: str, content: bytes, now: int) -> None:
        """Inbound sensitive payload; stores the file and raises the
        sensitive-data-received event for policies that trigger on it."""
        self.device.inject_file(name, content, sensitive=True)
        self._record(trace.inject_record(self.device_id, now, name, len(content), True))
        self.deliver_event(Event(EventKind.SENSITIVE_DATA_RECEIVED, now))

    def inject_file(self, name: str, content: bytes, sensitive: bool, now: int) -> None:
        if sensitive:
            self.receive_sensitive_data(name, content, now)
            return
        self.device.inject_file(name, content, sensitive=False)
        self._record(trace.inject_record(self.device_id, now, name, len(content), False))
