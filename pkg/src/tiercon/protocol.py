"""Manager/agent wire protocol.

Frames are a 4-byte big-endian payload length followed by that many bytes of
UTF-8 canonical JSON (one envelope per frame). Envelopes carry a protocol
version, a message type, the device id, a per-direction sequence number that
strictly increases so duplicates are detectable, a type-specific body, and
the sender's timestamp. docs/wire-protocol.md specifies the bytes and every
body schema.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from tiercon.policy import canonical_json

PROTOCOL_VERSION = 1
HEADER_SIZE = 4
MAX_FRAME = 1 << 20


class ProtocolError(Exception):
    pass


class MsgType(str, Enum):
    CONFIG_PUSH = "CONFIG_PUSH"
    LEVEL_SET = "LEVEL_SET"
    TRIGGER = "TRIGGER"
    ACK_REQUEST = "ACK_REQUEST"
    ACK = "ACK"
    HEARTBEAT = "HEARTBEAT"
    USAGE_REPORT = "USAGE_REPORT"
    SYNC_DIGEST = "SYNC_DIGEST"
    CANCEL_ALL = "CANCEL_ALL"


@dataclass(frozen=True)
class Envelope:
    msg_type: MsgType
    device_id: str
    seq: int
    body: Mapping[str, Any] = field(default_factory=dict)
    sent_at: int = 0
    version: int = PROTOCOL_VERSION

    def to_doc(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "msg_type": self.msg_type.value,
            "device_id": self.device_id,
            "seq": self.seq,
            "body": dict(self.body),
            "sent_at": self.sent_at,
        }

    def summary(self) -> dict[str, Any]:
        """Compact body view for traces; enough to audit protocol behavior
        without embedding whole policy documents."""
        body = self.body
        if self.msg_type is MsgType.CONFIG_PUSH:
            info = {"digest": body.get("digest"), "level": body.get("level")}
        elif self.msg_type is MsgType.SYNC_DIGEST:
            info = {"digest": body.get("digest"), "level": body.get("level")}
        elif self.msg_type is MsgType.TRIGGER:
            info = {"kind": body.get("kind")}
            if body.get("target_level") is not None:
                info["target_level"] = body.get("target_level")
        elif self.msg_type is MsgType.HEARTBEAT:
            info = {"level": body.get("level"), "mode": body.get("mode")}
        elif self.msg_type is MsgType.USAGE_REPORT:
            info = {"entries": len(body.get("entries", []))}
        elif self.msg_type is MsgType.LEVEL_SET:
            info = {"level": body.get("level")}
        else:
            info = {}
        return {k: v for k, v in info.items() if v is not None}


def envelope_from_doc(doc: Any) -> Envelope:
    if not isinstance(doc, dict):
        raise ProtocolError("envelope must be a JSON object")
    for key in ("version", "msg_type", "device_id", "seq", "body", "sent_at"):
        if key not in doc:
            raise ProtocolError(f"envelope missing {key}")
    if doc["version"] != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {doc['version']!r}")
    try:
        msg_type = MsgType(doc["msg_type"])
    except ValueError:
        raise ProtocolError(f"unknown message type {doc['msg_type']!r}") from None
    if not isinstance(doc["seq"], int) or isinstance(doc["seq"], bool) or doc["seq"] < 1:
        raise ProtocolError(f"seq must be a positive integer, got {doc['seq']!r}")
    if not isinstance(doc["device_id"], str):
        raise ProtocolError("device_id must be a string")
    if not isinstance(doc["body"], dict):
        raise ProtocolError("body must be an object")
    if not isinstance(doc["sent_at"], int) or isinstance(doc["sent_at"], bool):
        raise ProtocolError("sent_at must be an integer")
    return Envelope(msg_type, doc["device_id"], doc["seq"], doc["body"], doc["sent_at"])


def encode_envelope(env: Envelope) -> bytes:
    payload = canonical_json(env.to_doc()).encode("utf-8")
    if len(payload) > MAX_FRAME:
        raise ProtocolError(f"frame too large: {len(payload)} bytes")
    return struct.pack(">I", len(payload)) + payload


def decode_payload(payload: bytes) -> Envelope:
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable frame: {exc}") from None
    return envelope_from_doc(doc)


class FrameDecoder:
    """Incremental length-prefixed frame splitter for a byte stream."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer += data
        frames = []
        while True:
            if len(self._buffer) < HEADER_SIZE:
                break
            (length,) = struct.unpack_from(">I", self._buffer)
            if length > MAX_FRAME:
                raise ProtocolError(f"frame too large: {length} bytes")
            if len(self._buffer) < HEADER_SIZE + length:
                break
            frames.append(bytes(self._buffer[HEADER_SIZE : HEADER_SIZE + length]))
            del self._buffer[: HEADER_SIZE + length]
        return frames


class SequenceTracker:
    """Per-direction sequence numbering with duplicate detection."""

    def __init__(self):
        self._next_send = 1
        self._last_seen = 0

    def next_send(self) -> int:
        seq = self._next_send
        self._next_send += 1
        return seq

    def accept(self, seq: int) -> bool:
        """True when the sequence number is fresh; False for duplicates and
        stale replays, which the caller must ignore idempotently."""
        if seq <= self._last_seen:
            return False
        self._last_seen = seq
        return True
