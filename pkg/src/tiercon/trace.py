"""Trace records: the shared observable-event format.

Every interesting occurrence (transition, executed action, protocol envelope,
mode change, acknowledgment prompt, storage injection) becomes one JSON
object keyed by virtual time. A trace serializes to JSON lines with canonical
formatting, so identical runs are byte-identical files. The only wall-clock
data allowed anywhere is the optional ``wall_time`` field of the leading
``meta`` record, and comparison ignores it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from tiercon.device import ActionResult
from tiercon.escalation import ActionCommand, Transition
from tiercon.policy import canonical_json
from tiercon.protocol import Envelope

TRACE_SCHEMA = 1

#: Fields ignored when comparing traces.
WALL_CLOCK_FIELDS = ("wall_time",)


def meta_record(seed: Any = None, wall_time: str | None = None) -> dict[str, Any]:
    record: dict[str, Any] = {"type": "meta", "schema": TRACE_SCHEMA}
    if seed is not None:
        record["seed"] = seed
    if wall_time is not None:
        record["wall_time"] = wall_time
    return record


def transition_record(device_id: str, transition: Transition) -> dict[str, Any]:
    record = transition.to_doc(device_id)
    record["type"] = "transition"
    return record


def action_record(device_id: str, t: int, command: ActionCommand, result: ActionResult) -> dict[str, Any]:
    return {
        "type": "action",
        "t": t,
        "device_id": device_id,
        "action": command.action.to_doc(),
        "result": result.to_doc(),
    }


def envelope_record(t: int, direction: str, env: Envelope) -> dict[str, Any]:
    return {
        "type": "envelope",
        "t": t,
        "device_id": env.device_id,
        "dir": direction,
        "msg": env.msg_type.value,
        "seq": env.seq,
        "info": env.summary(),
    }


def mode_record(device_id: str, t: int, mode: str, reason: str) -> dict[str, Any]:
    return {"type": "mode", "t": t, "device_id": device_id, "mode": mode, "reason": reason}


def prompt_record(device_id: str, t: int) -> dict[str, Any]:
    return {"type": "prompt", "t": t, "device_id": device_id}


def ack_record(device_id: str, t: int, ok: bool) -> dict[str, Any]:
    return {"type": "ack", "t": t, "device_id": device_id, "ok": ok}


def cancel_record(device_id: str, t: int) -> dict[str, Any]:
    return {"type": "cancel_all", "t": t, "device_id": device_id}


def inject_record(device_id: str, t: int, name: str, size: int, sensitive: bool) -> dict[str, Any]:
    return {
        "type": "inject_file",
        "t": t,
        "device_id": device_id,
        "name": name,
        "size": size,
        "sensitive": sensitive,
    }


def file_delete_record(device_id: str, t: int, names: list[str], deleted: int) -> dict[str, Any]:
    return {
        "type": "file_delete",
        "t": t,
        "device_id": device_id,
        "names": list(names),
        "deleted": deleted,
    }


@dataclass
class Divergence:
    index: int
    got: dict[str, Any] | None
    want: dict[str, Any] | None

    def describe(self) -> str:
        return (
            f"first divergence at record {self.index}:\n"
            f"  got:  {canonical_json(self.got) if self.got is not None else '<missing>'}\n"
            f"  want: {canonical_json(self.want) if self.want is not None else '<missing>'}"
        )


class Trace:
    def __init__(self, records: list[dict[str, Any]] | None = None):
        self.records = records if records is not None else []

    def append(self, record: dict[str, Any]) -> None:
        self.records.append(record)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def of_type(self, kind: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r.get("type") == kind]

    def to_jsonl(self) -> str:
        return "\n".join(canonical_json(r) for r in self.records) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        import json

        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(records)


def _strip_wall_clock(record: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in record.items() if k not in WALL_CLOCK_FIELDS}


def verify_trace(trace: Trace, golden: Trace) -> Divergence | None:
    """Structural comparison, wall-clock metadata excluded. Returns the first
    diverging record, or None when equal."""
    for i in range(max(len(trace), len(golden))):
        got = _strip_wall_clock(trace.records[i]) if i < len(trace) else None
        want = _strip_wall_clock(golden.records[i]) if i < len(golden) else None
        if got != want:
            return Divergence(i, got, want)
    return None
