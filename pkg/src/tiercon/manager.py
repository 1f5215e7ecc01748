"""Server-side security manager.

Holds the security database (device records, user accounts, policies, the
org policy), talks to agents over the envelope protocol, and enforces the
org gate: no configuration ever goes out to a device unless it validates
against the organization's constraints.

Delivery is pluggable: a transport callable attempts to hand an envelope to
a device and reports success. Envelopes for unreachable devices are queued
in their device record and flushed, in order and ahead of any sync reply,
the next time the device is heard from; a pending escalation therefore wins
over stale device state after a reconnect.

Persistence is a single versioned JSON file with atomic replace-on-write,
adequate at this scale and swappable behind ``persist``/``load``.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from tiercon.crypto import verify_credential
from tiercon.policy import (
    OrgPolicy,
    SecurityPolicy,
    ValidationReport,
    canonical_json,
    org_from_doc,
    policy_digest,
    policy_from_doc,
    validate_policy,
)
from tiercon.protocol import Envelope, MsgType, ProtocolError, SequenceTracker, envelope_from_doc


class ManagerError(Exception):
    pass


class AuthError(ManagerError):
    """Caller is not the device owner or an authorized operator."""


class DatabaseError(ManagerError):
    pass


class OrgPolicyViolation(ManagerError):
    def __init__(self, report: ValidationReport):
        super().__init__("policy rejected by org validation: " + report.summary())
        self.report = report


_REMOTE_TRIGGER_KINDS = ("RemoteCall", "RemoteText", "RemoteEmail")


@dataclass
class DeviceRecord:
    device_id: str
    owner_user: str
    policy_id: str
    level: int = 5
    level_at: int = 0
    mode: str = "ServerControlled"
    last_heartbeat: int | None = None
    address: str | None = None
    queued: list[dict[str, Any]] = field(default_factory=list)
    trace: list[dict[str, Any]] = field(default_factory=list)
    audit_log: list[dict[str, Any]] = field(default_factory=list)

    def to_doc(self) -> dict[str, Any]:
        return {
            "device_id": self.device_id,
            "owner_user": self.owner_user,
            "policy_id": self.policy_id,
            "level": self.level,
            "level_at": self.level_at,
            "mode": self.mode,
            "last_heartbeat": self.last_heartbeat,
            "address": self.address,
            "queued": self.queued,
            "trace": self.trace,
            "audit_log": self.audit_log,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "DeviceRecord":
        return cls(
            device_id=doc["device_id"],
            owner_user=doc["owner_user"],
            policy_id=doc["policy_id"],
            level=doc.get("level", 5),
            level_at=doc.get("level_at", 0),
            mode=doc.get("mode", "ServerControlled"),
            last_heartbeat=doc.get("last_heartbeat"),
            address=doc.get("address"),
            queued=list(doc.get("queued", [])),
            trace=list(doc.get("trace", [])),
            audit_log=list(doc.get("audit_log", [])),
        )

    def view(self) -> dict[str, Any]:
        return {
            "device_id": self.device_id,
            "owner_user": self.owner_user,
            "policy_id": self.policy_id,
            "level": self.level,
            "level_at": self.level_at,
            "mode": self.mode,
            "last_heartbeat": self.last_heartbeat,
            "queued_messages": len(self.queued),
        }


@dataclass
class AccountRecord:
    """Per-user account data. Sensitive entries hold opaque references (vault
    handles, ciphertext blobs), never plaintext secrets; nothing in this
    process ever needs the real values."""

    user_id: str
    credential_hash: str
    accounts: dict[str, str] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "user_id": self.user_id,
            "credential_hash": self.credential_hash,
            "accounts": dict(self.accounts),
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "AccountRecord":
        return cls(doc["user_id"], doc["credential_hash"], dict(doc.get("accounts", {})))


DATABASE_VERSION = 1


class SecurityDatabase:
    def __init__(self):
        self.devices: dict[str, DeviceRecord] = {}
        self.accounts: dict[str, AccountRecord] = {}
        self.policies: dict[str, SecurityPolicy] = {}
        self.policy_versions: dict[str, int] = {}
        self.org: OrgPolicy = OrgPolicy()

    def to_doc(self) -> dict[str, Any]:
        return {
            "version": DATABASE_VERSION,
            "org": self.org.to_doc(),
            "policies": {
                pid: {"document": json.loads(canonical_json(p.to_doc())), "revision": self.policy_versions.get(pid, 1)}
                for pid, p in sorted(self.policies.items())
            },
            "devices": {did: rec.to_doc() for did, rec in sorted(self.devices.items())},
            "accounts": {uid: acc.to_doc() for uid, acc in sorted(self.accounts.items())},
        }

    @classmethod
    def from_doc(cls, doc: Any) -> "SecurityDatabase":
        if not isinstance(doc, dict):
            raise DatabaseError("database document must be a JSON object")
        version = doc.get("version")
        if version != DATABASE_VERSION:
            raise DatabaseError(f"unsupported database version {version!r}")
        db = cls()
        try:
            db.org = org_from_doc(doc.get("org", {}))
        except Exception as exc:
            raise DatabaseError(f"org: {exc}") from None
        try:
            for pid, entry in doc.get("policies", {}).items():
                db.policies[pid] = policy_from_doc(entry["document"])
                db.policy_versions[pid] = entry.get("revision", 1)
        except DatabaseError:
            raise
        except Exception as exc:
            raise DatabaseError(f"policies: {exc}") from None
        try:
            for did, entry in doc.get("devices", {}).items():
                db.devices[did] = DeviceRecord.from_doc(entry)
        except Exception as exc:
            raise DatabaseError(f"devices: {exc}") from None
        try:
            for uid, entry in doc.get("accounts", {}).items():
                db.accounts[uid] = AccountRecord.from_doc(entry)
        except Exception as exc:
            raise DatabaseError(f"accounts: {exc}") from None
        return db


class SecurityManager:
    def __init__(
        self,
        db: SecurityDatabase | None = None,
        operator_token: str = "operator-token",
        confirm_token: str = "CONFIRM-WIPE",
        clock: Callable[[], int] | None = None,
        transport: Callable[[str, Envelope], bool] | None = None,
    ):
        self.db = db if db is not None else SecurityDatabase()
        self.operator_token = operator_token
        self.confirm_token = confirm_token
        self.clock = clock or (lambda: int(time.time()))
        self.transport = transport or (lambda device_id, env: False)
        self._out_seq: dict[str, SequenceTracker] = {}
        self._in_seq: dict[str, SequenceTracker] = {}
        self._seen_usage: dict[str, set[int]] = {}

    # -- registration and policies ------------------------------------------

    def register_device(self, record: DeviceRecord) -> str:
        if record.device_id in self.db.devices:
            raise ManagerError(f"device already registered: {record.device_id}")
        self.db.devices[record.device_id] = record
        return record.device_id

    def register_account(self, record: AccountRecord) -> str:
        if record.user_id in self.db.accounts:
            raise ManagerError(f"account already registered: {record.user_id}")
        self.db.accounts[record.user_id] = record
        return record.user_id

    def set_org_policy(self, org: OrgPolicy) -> None:
        self.db.org = org

    def set_policy(
        self, policy: SecurityPolicy, expected_revision: int | None = None
    ) -> tuple[ValidationReport, int]:
        """Store a policy after validating it against the org policy.
        Invalid policies are not stored; a stale expected_revision raises
        ManagerError so concurrent editors cannot silently clobber each
        other."""
        current = self.db.policy_versions.get(policy.id, 0)
        if expected_revision is not None and expected_revision != current:
            raise ManagerError(
                f"policy {policy.id!r} revision conflict: expected {expected_revision}, have {current}"
            )
        report = validate_policy(policy, self.db.org)
        if report.valid:
            self.db.policies[policy.id] = policy
            self.db.policy_versions[policy.id] = current + 1
        return report, self.db.policy_versions.get(policy.id, current)

    def get_policy(self, policy_id: str) -> tuple[SecurityPolicy, int]:
        if policy_id not in self.db.policies:
            raise ManagerError(f"no such policy: {policy_id}")
        return self.db.policies[policy_id], self.db.policy_versions.get(policy_id, 1)

    def device(self, device_id: str) -> DeviceRecord:
        if device_id not in self.db.devices:
            raise ManagerError(f"no such device: {device_id}")
        return self.db.devices[device_id]

    # -- outbound -------------------------------------------------------------

    def _next_seq(self, device_id: str) -> int:
        return self._out_seq.setdefault(device_id, SequenceTracker()).next_send()

    def _make_envelope(self, device_id: str, msg_type: MsgType, body: dict[str, Any]) -> Envelope:
        return Envelope(msg_type, device_id, self._next_seq(device_id), body, self.clock())

    def _dispatch(self, record: DeviceRecord, env: Envelope) -> bool:
        """Deliver or queue. Queued envelopes keep strict FIFO order, so no
        newer envelope may jump ahead of them."""
        if not record.queued and self.transport(record.device_id, env):
            return True
        record.queued.append(env.to_doc())
        return False

    def _flush_queue(self, record: DeviceRecord) -> list[Envelope]:
        flushed = [envelope_from_doc(doc) for doc in record.queued]
        record.queued = []
        return flushed

    def _config_push_envelope(self, record: DeviceRecord) -> Envelope:
        policy, _rev = self.get_policy(record.policy_id)
        report = validate_policy(policy, self.db.org)
        if not report.valid:
            raise OrgPolicyViolation(report)
        body = {
            "policy": json.loads(canonical_json(policy.to_doc())),
            "digest": policy_digest(policy),
            "level": record.level,
        }
        return self._make_envelope(record.device_id, MsgType.CONFIG_PUSH, body)

    def push_config(self, device_id: str) -> dict[str, Any]:
        """Send the device its assigned policy and current level setting.
        Refused outright when the policy fails org validation."""
        record = self.device(device_id)
        env = self._config_push_envelope(record)
        delivered = self._dispatch(record, env)
        return {"delivered": delivered, "queued": not delivered, "digest": env.body["digest"]}

    def authenticate(self, device_id: str, auth: str | None) -> str:
        """Returns the caller role: operator or owner."""
        if auth and auth == self.operator_token:
            return "operator"
        record = self.device(device_id)
        account = self.db.accounts.get(record.owner_user)
        if auth and account and verify_credential(auth, account.credential_hash):
            return "owner"
        raise AuthError("not authorized for this device")

    def remote_trigger(
        self,
        device_id: str,
        kind: str,
        auth: str | None,
        level: int | None = None,
        confirm: str | None = None,
    ) -> dict[str, Any]:
        """Fire a remote triggering event at a device (the remote phone call,
        text, or email). A jump to level 1 additionally demands the
        confirmation token; rejected attempts are logged, not delivered."""
        record = self.device(device_id)
        try:
            role = self.authenticate(device_id, auth)
        except AuthError:
            record.audit_log.append(
                {"event": "trigger_rejected", "reason": "unauthenticated", "kind": kind, "at": self.clock()}
            )
            raise
        if kind not in _REMOTE_TRIGGER_KINDS:
            raise ManagerError(f"unsupported remote trigger kind: {kind}")
        if level is not None and level == 1 and confirm != self.confirm_token:
            record.audit_log.append(
                {"event": "trigger_rejected", "reason": "missing_confirmation", "kind": kind, "at": self.clock()}
            )
            raise AuthError("level-1 jump requires the confirmation token")
        body: dict[str, Any] = {"kind": kind}
        if level is not None:
            body["target_level"] = level
        env = self._make_envelope(device_id, MsgType.TRIGGER, body)
        delivered = self._dispatch(record, env)
        record.audit_log.append(
            {"event": "trigger_sent", "kind": kind, "level": level, "role": role,
             "queued": not delivered, "at": self.clock()}
        )
        return {"delivered": delivered, "queued": not delivered, "device": record.view()}

    def remote_file_delete(self, device_id: str, names: list[str], auth: str | None) -> dict[str, Any]:
        """The web-supplied file list: delete exactly these files on the
        device. Unknown names surface as an error from the agent."""
        record = self.device(device_id)
        self.authenticate(device_id, auth)
        if not names or not all(isinstance(n, str) for n in names):
            raise ManagerError("names must be a non-empty list of file names")
        env = self._make_envelope(device_id, MsgType.TRIGGER, {"kind": "FileDelete", "names": names})
        delivered = self._dispatch(record, env)
        record.audit_log.append(
            {"event": "file_delete_sent", "names": names, "queued": not delivered, "at": self.clock()}
        )
        if delivered:
            record.trace.append(
                {"type": "file_delete", "t": self.clock(), "device_id": device_id, "names": names}
            )
        return {"delivered": delivered, "queued": not delivered}

    def remote_ack(self, device_id: str, credential: str) -> dict[str, Any]:
        record = self.device(device_id)
        env = self._make_envelope(device_id, MsgType.ACK, {"credential": credential})
        delivered = self._dispatch(record, env)
        return {"delivered": delivered, "queued": not delivered}

    def request_ack(self, device_id: str) -> dict[str, Any]:
        record = self.device(device_id)
        env = self._make_envelope(device_id, MsgType.ACK_REQUEST, {})
        delivered = self._dispatch(record, env)
        return {"delivered": delivered, "queued": not delivered}

    def remote_reset(self, device_id: str, credential: str) -> dict[str, Any]:
        record = self.device(device_id)
        env = self._make_envelope(device_id, MsgType.CANCEL_ALL, {"credential": credential})
        delivered = self._dispatch(record, env)
        return {"delivered": delivered, "queued": not delivered}

    # -- inbound ----------------------------------------------------------------

    def handle_agent_message(self, env: Envelope) -> list[Envelope]:
        """Process one agent envelope and return the reply batch. Queued
        envelopes ride ahead of the reply so a pending escalation is applied
        before any sync completes. Duplicate sequence numbers produce no side
        effects and no replies."""
        if env.device_id not in self.db.devices:
            raise ProtocolError(f"unknown device: {env.device_id}")
        record = self.db.devices[env.device_id]
        if not self._in_seq.setdefault(env.device_id, SequenceTracker()).accept(env.seq):
            return []

        replies = self._flush_queue(record)
        if env.msg_type is MsgType.HEARTBEAT:
            record.last_heartbeat = env.sent_at
            self._adopt_state(record, env.body, env.sent_at)
            replies.append(self._make_envelope(env.device_id, MsgType.HEARTBEAT, {}))
        elif env.msg_type is MsgType.USAGE_REPORT:
            self._ingest_report(record, env)
        elif env.msg_type is MsgType.SYNC_DIGEST:
            self._adopt_state(record, env.body, env.body.get("as_of", env.sent_at))
            policy, _rev = self.get_policy(record.policy_id)
            digest = policy_digest(policy)
            replies.append(
                self._make_envelope(env.device_id, MsgType.SYNC_DIGEST, {"digest": digest, "level": record.level})
            )
            if env.body.get("digest") != digest:
                try:
                    replies.append(self._config_push_envelope(record))
                except OrgPolicyViolation:
                    pass  # the gate holds even during sync; stale device config beats invalid config
        elif env.msg_type is MsgType.ACK:
            record.audit_log.append({"event": "ack", "at": env.body.get("at", env.sent_at)})
        else:
            raise ProtocolError(f"unexpected agent message type {env.msg_type}")
        return replies

    def _adopt_state(self, record: DeviceRecord, body: dict[str, Any], at: int) -> None:
        level = body.get("level")
        mode = body.get("mode")
        if isinstance(level, int) and at >= record.level_at:
            record.level = level
            record.level_at = at
        if isinstance(mode, str):
            record.mode = mode

    def _ingest_report(self, record: DeviceRecord, env: Envelope) -> None:
        seen = self._seen_usage.setdefault(env.device_id, set())
        for entry in env.body.get("entries", []):
            n = entry.get("n")
            if n in seen:
                continue
            if n is not None:
                seen.add(n)
            record.audit_log.append({k: v for k, v in entry.items() if k != "n"})
        for doc in env.body.get("transitions", []):
            if doc not in record.trace:
                record.trace.append(doc)
                if doc.get("t", 0) >= record.level_at:
                    record.level = doc["to"]
                    record.level_at = doc["t"]

    # -- persistence ----------------------------------------------------------

    def persist(self, path: str) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.db.to_doc(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str, **kwargs: Any) -> "SecurityManager":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise
        except OSError as exc:
            raise DatabaseError(f"cannot read database: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DatabaseError(f"unreadable database at line {exc.lineno}: {exc.msg}") from None
        return cls(db=SecurityDatabase.from_doc(doc), **kwargs)
