"""The simulated mobile device: functions, storage actions, usage tracking.

Every security action in the catalog executes here against simulated state,
so its effect is observable and checkable: ringing flips the ringer flags,
disabling functions makes later call attempts fail, deletion frees clusters,
overwriting fills them, and the forensic ``recover_scan`` can prove whether
wiped content is really gone.

Telephony, SMS, and GPS are trace effects (inbox entries, call-log entries,
a configured position), not real I/O.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from tiercon import crypto
from tiercon.escalation import ActionCommand
from tiercon.policy import ActionKind
from tiercon.storage import SimStorage

#: Selector tokens for file operations; anything else is a list of names.
ALL = "ALL"
SENSITIVE = "SENSITIVE"

REDELETE_PATTERNS = (0x00, 0xFF)


class ActionError(Exception):
    pass


class LockState(str, Enum):
    OPEN = "Open"
    PASSWORD_ONLY = "PasswordOnly"
    PASSWORD_PLUS_SIGNATURE = "PasswordPlusSignature"


@dataclass
class DeviceFunctions:
    call_placement: bool = True
    data_viewing: bool = True
    email: bool = True
    browsing: bool = True
    forced_outgoing_number: str | None = None
    forced_url: str | None = None
    ringer_active: bool = False
    ringer_interval_s: int | None = None
    lock: LockState = LockState.OPEN

    def flags(self) -> dict[str, bool]:
        return {
            "call_placement": self.call_placement,
            "data_viewing": self.data_viewing,
            "email": self.email,
            "browsing": self.browsing,
        }


@dataclass
class UsageEntry:
    t: int
    kind: str  # CallPlaced, CallReceived, UrlVisited, EmailSent, EmailReceived, TextSent, TextReceived
    detail: str

    def to_doc(self) -> dict[str, Any]:
        return {"t": self.t, "kind": self.kind, "detail": self.detail}


@dataclass
class ActionResult:
    kind: ActionKind
    detail: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "detail": self.detail}


def _resolve_selector(storage: SimStorage, selector) -> list[str]:
    names = sorted(storage.files)
    if selector == ALL:
        return names
    if selector == SENSITIVE:
        return [n for n in names if storage.files[n].sensitive]
    missing = [n for n in selector if n not in storage.files]
    if missing:
        raise ActionError("no such file(s): " + ", ".join(sorted(missing)))
    return list(selector)


class SimDevice:
    def __init__(
        self,
        device_id: str,
        storage: SimStorage | None = None,
        position: tuple[float, float] = (35.79, -78.78),
        enc_key: bytes | None = None,
        rng: random.Random | None = None,
    ):
        self.device_id = device_id
        self.storage = storage if storage is not None else SimStorage()
        self.functions = DeviceFunctions()
        self.position = position
        self.enc_key = enc_key
        self.rng = rng if rng is not None else random.Random(device_id)
        self.inbox: list[tuple[int, str]] = []
        self.call_log: list[tuple[int, str, str]] = []
        self.usage_recording = False
        self.pending_usage: list[UsageEntry] = []

    # -- usage simulation ---------------------------------------------------

    def _record_use(self, t: int, kind: str, detail: str) -> None:
        if self.usage_recording:
            self.pending_usage.append(UsageEntry(t, kind, detail))

    def drain_usage(self) -> list[UsageEntry]:
        entries, self.pending_usage = self.pending_usage, []
        return entries

    def place_call(self, number: str, now: int) -> dict[str, Any]:
        if not self.functions.call_placement:
            self._record_use(now, "CallPlaced", f"blocked:{number}")
            return {"placed": False, "reason": "call placement disabled"}
        actual = self.functions.forced_outgoing_number or number
        self.call_log.append((now, "outgoing", actual))
        self._record_use(now, "CallPlaced", actual)
        return {"placed": True, "number": actual}

    def visit_url(self, url: str, now: int) -> dict[str, Any]:
        if not self.functions.browsing:
            self._record_use(now, "UrlVisited", f"blocked:{url}")
            return {"visited": False, "reason": "browsing disabled"}
        actual = self.functions.forced_url or url
        self._record_use(now, "UrlVisited", actual)
        return {"visited": True, "url": actual}

    def receive_text(self, message: str, now: int) -> None:
        self.inbox.append((now, message))
        self._record_use(now, "TextReceived", message)

    # -- file actions ---------------------------------------------------------

    def inject_file(self, name: str, content: bytes, sensitive: bool = False) -> None:
        self.storage.write_file(name, content, sensitive=sensitive)

    def partition_sensitive(self) -> int:
        """Move every sensitive file into the secure region, atomically.

        Vacated clusters keep their bytes (deleted-not-overwritten) until an
        overwrite pass claims them.
        """
        movable = [
            name
            for name in sorted(self.storage.files)
            if self.storage.files[name].sensitive
            and not all(self.storage.in_secure_region(c) for c in self.storage.files[name].clusters)
        ]
        needed = sum(
            self.storage.clusters_needed(self.storage.files[n].length) for n in movable
        )
        free = self.storage.free_secure_clusters()
        if needed > free:
            raise ActionError(
                f"secure region too small: need {needed} clusters, {free} free; nothing moved"
            )
        for name in movable:
            self.storage.move_to_secure(name)
        return len(movable)

    def encrypt_files(self, selector, key: bytes | None = None) -> int:
        key = key if key is not None else self.enc_key
        if key is None:
            raise ActionError("no encryption key provisioned")
        names = _resolve_selector(self.storage, selector)
        if selector == SENSITIVE:
            names = [n for n in names if not self.storage.files[n].encrypted]
        already = [n for n in names if self.storage.files[n].encrypted]
        if already:
            raise ActionError("already encrypted: " + ", ".join(sorted(already)))
        for name in names:
            plaintext = self.storage.read_file(name)
            nonce = self.rng.randbytes(crypto.NONCE_SIZE)
            sealed = crypto.seal(key, nonce, plaintext, aad=name.encode("utf-8"))
            self.storage.replace_content(name, sealed)
            self.storage.files[name].encrypted = True
        return len(names)

    def decrypt_files(self, selector, key: bytes | None = None) -> int:
        key = key if key is not None else self.enc_key
        if key is None:
            raise ActionError("no encryption key provisioned")
        names = _resolve_selector(self.storage, selector)
        if selector in (ALL, SENSITIVE):
            names = [n for n in names if self.storage.files[n].encrypted]
        plain = [n for n in names if not self.storage.files[n].encrypted]
        if plain:
            raise ActionError("not encrypted: " + ", ".join(sorted(plain)))
        for name in names:
            sealed = self.storage.read_file(name)
            content = crypto.open_sealed(key, sealed, aad=name.encode("utf-8"))
            self.storage.replace_content(name, content)
            self.storage.files[name].encrypted = False
        return len(names)

    def delete_files(self, selector) -> int:
        """Release the selected files. Bytes stay in the clusters, so content
        remains forensically recoverable until overwritten."""
        names = _resolve_selector(self.storage, selector)
        for name in names:
            self.storage.delete_file(name)
        return len(names)

    def overwrite_deleted(self, pattern: int = 0x00) -> int:
        return self.storage.overwrite_freed(pattern)

    def redelete(self, passes: int = 3) -> tuple[int, int]:
        """Repeat the overwrite pass, alternating 0x00/0xFF fills.

        Returns (passes applied, final pattern byte).
        """
        if passes < 1:
            raise ActionError(f"redelete needs at least one pass, got {passes}")
        last_pattern = REDELETE_PATTERNS[0]
        for i in range(passes):
            last_pattern = REDELETE_PATTERNS[i % len(REDELETE_PATTERNS)]
            self.storage.overwrite_freed(last_pattern)
        return passes, last_pattern

    def recover_scan(self, needle: bytes) -> list[tuple[int, int]]:
        """Forensic oracle: exhaustive raw scan of every cluster byte."""
        return self.storage.scan(needle)

    # -- action dispatch ------------------------------------------------------

    def execute_action(self, command: ActionCommand, now: int) -> ActionResult:
        action = command.action
        kind = action.kind
        fn = self.functions

        if kind is ActionKind.RING:
            fn.ringer_active = True
            fn.ringer_interval_s = action.param("ring_interval_seconds")
            return ActionResult(kind, {"interval_s": fn.ringer_interval_s})
        if kind is ActionKind.SEND_TEXT:
            message = action.param("message", "")
            self.receive_text(message, now)
            return ActionResult(kind, {"message": message})
        if kind is ActionKind.TRACK:
            return ActionResult(kind, {"position": list(self.position)})
        if kind is ActionKind.PLAY_RECORDED_CALL:
            message = action.param("message", "")
            self.call_log.append((now, "recorded_call", message))
            self._record_use(now, "CallReceived", "recorded_call")
            return ActionResult(kind, {"message": message})
        if kind is ActionKind.PASSWORD_ONLY_ACCESS:
            fn.lock = LockState.PASSWORD_ONLY
            return ActionResult(kind, {"lock": fn.lock.value})
        if kind is ActionKind.FORCE_OUTGOING_CALLS:
            fn.forced_outgoing_number = action.param("number")
            return ActionResult(kind, {"number": fn.forced_outgoing_number})
        if kind is ActionKind.FORCE_URL:
            fn.forced_url = action.param("url")
            return ActionResult(kind, {"url": fn.forced_url})
        if kind is ActionKind.DISABLE_FUNCTIONS:
            for name in action.param("functions", []):
                setattr(fn, name, False)
            return ActionResult(kind, {"functions": fn.flags()})
        if kind is ActionKind.RECORD_AND_REPORT_USE:
            self.usage_recording = True
            return ActionResult(kind, {"recording": True})
        if kind is ActionKind.PARTITION_SENSITIVE:
            moved = self.partition_sensitive()
            return ActionResult(kind, {"moved": moved})
        if kind is ActionKind.ENCRYPT_SENSITIVE:
            count = self.encrypt_files(SENSITIVE)
            return ActionResult(kind, {"encrypted": count})
        if kind is ActionKind.DELETE_SENSITIVE:
            count = self.delete_files(SENSITIVE)
            return ActionResult(kind, {"deleted": count})
        if kind is ActionKind.DELETE_ALL:
            count = self.delete_files(ALL)
            return ActionResult(kind, {"deleted": count})
        if kind is ActionKind.OVERWRITE_DELETED:
            clusters = self.overwrite_deleted(action.param("pattern", 0x00))
            return ActionResult(kind, {"clusters": clusters, "pattern": action.param("pattern", 0x00)})
        if kind is ActionKind.REDELETE:
            passes, final_pattern = self.redelete(action.param("passes", 3))
            return ActionResult(kind, {"passes": passes, "final_pattern": final_pattern})
        raise ActionError(f"unsupported action kind: {kind}")
