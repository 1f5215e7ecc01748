"""Tiered security policies: levels, triggers, actions, validation, JSON form.

A policy is five tiers, one per security level 5..1 (5 = normal readiness,
1 = maximum). Each tier lists the triggers that escalate the device away from
it and the actions executed when the tier is entered. Triggers normally
target the next-lower level (5 -> 4 -> 3 -> 2 -> 1); a trigger carrying
``jump_to_level`` targets that level directly and is the only way a
transition may skip levels.

Policies serialize to a canonical JSON document (schema version 1, sorted
keys, no insignificant whitespace, UTF-8) so that two structurally equal
policies are byte-identical and digest comparison can detect configuration
drift between server and device. See docs/policy-schema.md for the byte-exact
definition.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator, Mapping

LEVELS = (5, 4, 3, 2, 1)
LEVEL_MIN = 1
LEVEL_MAX = 5
SCHEMA_VERSION = 1

DEFAULT_ACK_INTERVAL_S = 1800
DEFAULT_ACK_TIMEOUT_S = 7200


class PolicyError(Exception):
    """Raised for malformed policy documents and unusable policy values."""


class TriggerKind(str, Enum):
    REMOTE_CALL = "RemoteCall"
    REMOTE_TEXT = "RemoteText"
    REMOTE_EMAIL = "RemoteEmail"
    CREDENTIAL_ENTRY = "CredentialEntry"
    ACK_TIMEOUT = "AckTimeout"
    DWELL_ELAPSED = "DwellElapsed"
    SCHEDULED_DATETIME = "ScheduledDateTime"
    SENSITIVE_DATA_RECEIPT = "SensitiveDataReceipt"


#: Trigger kinds fired by the clock rather than by a delivered event.
TIMER_TRIGGER_KINDS = frozenset(
    {TriggerKind.ACK_TIMEOUT, TriggerKind.DWELL_ELAPSED, TriggerKind.SCHEDULED_DATETIME}
)


class ActionKind(str, Enum):
    RING = "Ring"
    SEND_TEXT = "SendText"
    TRACK = "Track"
    PLAY_RECORDED_CALL = "PlayRecordedCall"
    PASSWORD_ONLY_ACCESS = "PasswordOnlyAccess"
    FORCE_OUTGOING_CALLS = "ForceOutgoingCalls"
    FORCE_URL = "ForceUrl"
    DISABLE_FUNCTIONS = "DisableFunctions"
    RECORD_AND_REPORT_USE = "RecordAndReportUse"
    PARTITION_SENSITIVE = "PartitionSensitive"
    ENCRYPT_SENSITIVE = "EncryptSensitive"
    DELETE_SENSITIVE = "DeleteSensitive"
    DELETE_ALL = "DeleteAll"
    OVERWRITE_DELETED = "OverwriteDeleted"
    REDELETE = "Redelete"


# Parameter contract per trigger kind: {name: (required, validator)}.
def _positive_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def _non_negative_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _non_empty_str(v: Any) -> bool:
    return isinstance(v, str) and len(v) > 0


def _byte_value(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= 255


_FUNCTION_FLAGS = ("call_placement", "data_viewing", "email", "browsing")


def _function_list(v: Any) -> bool:
    return (
        isinstance(v, list)
        and len(v) > 0
        and all(f in _FUNCTION_FLAGS for f in v)
        and len(set(v)) == len(v)
    )


_TRIGGER_PARAMS: dict[TriggerKind, dict[str, tuple[bool, Any]]] = {
    TriggerKind.REMOTE_CALL: {},
    TriggerKind.REMOTE_TEXT: {},
    TriggerKind.REMOTE_EMAIL: {},
    TriggerKind.CREDENTIAL_ENTRY: {"on": (True, lambda v: v in ("success", "failure"))},
    TriggerKind.ACK_TIMEOUT: {"timeout_seconds": (True, _positive_int)},
    TriggerKind.DWELL_ELAPSED: {"dwell_seconds": (True, _positive_int)},
    TriggerKind.SCHEDULED_DATETIME: {"at": (True, _non_negative_int)},
    TriggerKind.SENSITIVE_DATA_RECEIPT: {},
}

_ACTION_PARAMS: dict[ActionKind, dict[str, tuple[bool, Any]]] = {
    ActionKind.RING: {"ring_interval_seconds": (True, _positive_int)},
    ActionKind.SEND_TEXT: {"message": (True, _non_empty_str)},
    ActionKind.TRACK: {},
    ActionKind.PLAY_RECORDED_CALL: {"message": (True, _non_empty_str)},
    ActionKind.PASSWORD_ONLY_ACCESS: {},
    ActionKind.FORCE_OUTGOING_CALLS: {"number": (True, _non_empty_str)},
    ActionKind.FORCE_URL: {"url": (True, _non_empty_str)},
    ActionKind.DISABLE_FUNCTIONS: {"functions": (True, _function_list)},
    ActionKind.RECORD_AND_REPORT_USE: {},
    ActionKind.PARTITION_SENSITIVE: {},
    ActionKind.ENCRYPT_SENSITIVE: {},
    ActionKind.DELETE_SENSITIVE: {},
    ActionKind.DELETE_ALL: {},
    ActionKind.OVERWRITE_DELETED: {"pattern": (False, _byte_value)},
    ActionKind.REDELETE: {"passes": (True, _positive_int)},
}


@dataclass(frozen=True)
class TriggerSpec:
    """One escalation trigger.

    ``params`` holds the kind-specific parameters (``dwell_seconds``,
    ``timeout_seconds``, ``at``, ``on``). ``jump_to_level`` marks the trigger
    as targeting that level instead of the next-lower one.
    """

    kind: TriggerKind
    params: Mapping[str, Any] = field(default_factory=dict)
    jump_to_level: int | None = None

    def param(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind.value, **self.params}
        if self.jump_to_level is not None:
            doc["jump_to_level"] = self.jump_to_level
        return doc

    def describe(self) -> str:
        parts = [f"{k}={self.params[k]}" for k in sorted(self.params)]
        if self.jump_to_level is not None:
            parts.append(f"jump_to_level={self.jump_to_level}")
        return self.kind.value + (f"({', '.join(parts)})" if parts else "")


@dataclass(frozen=True)
class ActionSpec:
    """One security action with its kind-specific parameters."""

    kind: ActionKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def param(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def to_doc(self) -> dict[str, Any]:
        return {"kind": self.kind.value, **self.params}


@dataclass(frozen=True)
class TierDefinition:
    """A security level, its escalation triggers, and its entry actions."""

    level: int
    escalation_triggers: tuple[TriggerSpec, ...] = ()
    actions: tuple[ActionSpec, ...] = ()

    def to_doc(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "escalation_triggers": [t.to_doc() for t in self.escalation_triggers],
            "actions": [a.to_doc() for a in self.actions],
        }


@dataclass(frozen=True)
class SecurityPolicy:
    """A complete tier ladder plus the acknowledgment dead-man parameters.

    ``ack_interval_seconds`` is how often the device-resident manager prompts
    the user for an acknowledgment while it is in control;
    ``ack_timeout_seconds`` is how long the user may stay silent before the
    acknowledgment-timeout trigger fires.
    """

    id: str
    tiers: tuple[TierDefinition, ...]
    ack_interval_seconds: int = DEFAULT_ACK_INTERVAL_S
    ack_timeout_seconds: int = DEFAULT_ACK_TIMEOUT_S

    def tier(self, level: int) -> TierDefinition:
        for t in self.tiers:
            if t.level == level:
                return t
        raise PolicyError(f"policy {self.id!r} has no tier for level {level}")

    def to_doc(self) -> dict[str, Any]:
        tiers = sorted(self.tiers, key=lambda t: -t.level)
        return {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "ack_interval_seconds": self.ack_interval_seconds,
            "ack_timeout_seconds": self.ack_timeout_seconds,
            "tiers": [t.to_doc() for t in tiers],
        }


@dataclass(frozen=True)
class OrgPolicy:
    """Organization-wide constraints a device policy must satisfy.

    ``forbidden_actions`` pairs an action kind with the least-severe level at
    which it is forbidden; the action is then disallowed at that level and at
    every less-severe (numerically higher) one. ``(DeleteAll, 1)`` forbids it
    everywhere, ``(DeleteAll, 2)`` allows it only at level 1.

    ``max_auto_level`` is the floor for automatic escalation: no timer-driven
    trigger may target a level below (more severe than) it. The default of 1
    places no restriction.
    """

    forbidden_actions: tuple[tuple[ActionKind, int], ...] = ()
    max_auto_level: int = LEVEL_MIN

    def to_doc(self) -> dict[str, Any]:
        return {
            "forbidden_actions": [
                {"kind": k.value, "from_level": lvl} for k, lvl in self.forbidden_actions
            ],
            "max_auto_level": self.max_auto_level,
        }


PERMISSIVE_ORG = OrgPolicy()


@dataclass
class Violation:
    level: int | None
    subject: str
    message: str

    def to_doc(self) -> dict[str, Any]:
        return {"level": self.level, "subject": self.subject, "message": self.message}


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_doc(self) -> dict[str, Any]:
        return {"valid": self.valid, "violations": [v.to_doc() for v in self.violations]}

    def summary(self) -> str:
        if self.valid:
            return "valid"
        lines = [f"invalid: {len(self.violations)} violation(s)"]
        for v in self.violations:
            where = f"level {v.level}" if v.level is not None else "policy"
            lines.append(f"  {where}: {v.subject}: {v.message}")
        return "\n".join(lines)


def next_lower_level(level: int) -> int | None:
    """The level an unmarked trigger escalates to, or None at the bottom."""
    return level - 1 if level > LEVEL_MIN else None


def trigger_target(tier_level: int, trigger: TriggerSpec) -> int | None:
    if trigger.jump_to_level is not None:
        return trigger.jump_to_level
    return next_lower_level(tier_level)


def triggers_into(policy: SecurityPolicy, level: int) -> list[TriggerSpec]:
    """Every trigger anywhere in the policy whose target is ``level``."""
    found = []
    for tier in policy.tiers:
        for trig in tier.escalation_triggers:
            if trigger_target(tier.level, trig) == level:
                found.append(trig)
    return found


def build_default_policy(
    contact_number: str = "+1-555-0100",
    recovery_url: str = "https://recovery.example/device",
) -> SecurityPolicy:
    """The stock five-tier ladder.

    Level 5 is quiet. A remote call (or two silent hours on the dead-man
    switch) drops to level 4, which rings every minute, texts the holder,
    and locks the screen to password-only. One hour at 4 drops to 3 (usage
    reporting, forced call/URL routing, sensitive-data encryption); two hours
    at 3 drops to 2 (device disabled, sensitive data deleted); four hours at
    2 drops to 1, which wipes, overwrites, and re-deletes storage. A
    confirmed remote call can jump straight to level 1 from any level.
    """
    jump_call = TriggerSpec(TriggerKind.REMOTE_CALL, jump_to_level=1)
    tiers = (
        TierDefinition(
            level=5,
            escalation_triggers=(
                TriggerSpec(TriggerKind.REMOTE_CALL),
                TriggerSpec(TriggerKind.ACK_TIMEOUT, {"timeout_seconds": 7200}),
                jump_call,
            ),
            actions=(),
        ),
        TierDefinition(
            level=4,
            escalation_triggers=(
                TriggerSpec(TriggerKind.DWELL_ELAPSED, {"dwell_seconds": 3600}),
                jump_call,
            ),
            actions=(
                ActionSpec(ActionKind.RING, {"ring_interval_seconds": 60}),
                ActionSpec(
                    ActionKind.SEND_TEXT,
                    {"message": f"If found, please call {contact_number}."},
                ),
                ActionSpec(ActionKind.PASSWORD_ONLY_ACCESS),
                ActionSpec(
                    ActionKind.SEND_TEXT,
                    {"message": "Keep the device powered on and await contact."},
                ),
                ActionSpec(
                    ActionKind.PLAY_RECORDED_CALL,
                    {"message": "This device is reported missing."},
                ),
            ),
        ),
        TierDefinition(
            level=3,
            escalation_triggers=(
                TriggerSpec(TriggerKind.DWELL_ELAPSED, {"dwell_seconds": 7200}),
                jump_call,
            ),
            actions=(
                ActionSpec(ActionKind.RECORD_AND_REPORT_USE),
                ActionSpec(ActionKind.FORCE_OUTGOING_CALLS, {"number": contact_number}),
                ActionSpec(ActionKind.FORCE_URL, {"url": recovery_url}),
                ActionSpec(ActionKind.ENCRYPT_SENSITIVE),
            ),
        ),
        TierDefinition(
            level=2,
            escalation_triggers=(
                TriggerSpec(TriggerKind.DWELL_ELAPSED, {"dwell_seconds": 14400}),
                jump_call,
            ),
            actions=(
                ActionSpec(ActionKind.DISABLE_FUNCTIONS, {"functions": list(_FUNCTION_FLAGS)}),
                ActionSpec(ActionKind.DELETE_SENSITIVE),
            ),
        ),
        TierDefinition(
            level=1,
            actions=(
                ActionSpec(ActionKind.DELETE_ALL),
                ActionSpec(ActionKind.OVERWRITE_DELETED, {"pattern": 0}),
                ActionSpec(ActionKind.REDELETE, {"passes": 3}),
            ),
        ),
    )
    return SecurityPolicy(id="default", tiers=tiers)


def _check_params(
    contract: dict[str, tuple[bool, Any]],
    params: Mapping[str, Any],
    level: int,
    subject: str,
    out: list[Violation],
) -> None:
    for name, (required, check) in contract.items():
        if name not in params:
            if required:
                out.append(Violation(level, subject, f"missing parameter {name!r}"))
        elif not check(params[name]):
            out.append(
                Violation(level, subject, f"parameter {name!r} has invalid value {params[name]!r}")
            )
    for name in params:
        if name not in contract:
            out.append(Violation(level, subject, f"unexpected parameter {name!r}"))


def validate_policy(policy: SecurityPolicy, org: OrgPolicy = PERMISSIVE_ORG) -> ValidationReport:
    """Check structural invariants and the org constraints, returning every
    violation found (violations are data, not exceptions)."""
    out: list[Violation] = []

    seen: dict[int, int] = {}
    for tier in policy.tiers:
        seen[tier.level] = seen.get(tier.level, 0) + 1
    for level in LEVELS:
        if level not in seen:
            out.append(Violation(level, "structure", f"missing level {level}"))
    for level, count in sorted(seen.items(), reverse=True):
        if level not in LEVELS:
            out.append(Violation(level, "structure", f"level {level} outside 1..5"))
        elif count > 1:
            out.append(Violation(level, "structure", f"level {level} defined {count} times"))

    expected_order = sorted((t.level for t in policy.tiers), reverse=True)
    if [t.level for t in policy.tiers] != expected_order:
        out.append(Violation(None, "structure", "tiers not sorted by descending level"))

    if not _positive_int(policy.ack_interval_seconds):
        out.append(Violation(None, "structure", "ack_interval_seconds must be a positive integer"))
    if not _positive_int(policy.ack_timeout_seconds):
        out.append(Violation(None, "structure", "ack_timeout_seconds must be a positive integer"))

    for tier in policy.tiers:
        if tier.level == LEVEL_MAX and tier.actions:
            out.append(
                Violation(tier.level, "structure", "level 5 is the normal state and takes no actions")
            )
        for trig in tier.escalation_triggers:
            subject = trig.kind.value
            _check_params(_TRIGGER_PARAMS[trig.kind], trig.params, tier.level, subject, out)
            if trig.jump_to_level is not None:
                if trig.jump_to_level not in LEVELS:
                    out.append(
                        Violation(tier.level, subject, f"jump_to_level {trig.jump_to_level} outside 1..5")
                    )
                elif trig.jump_to_level >= tier.level:
                    out.append(
                        Violation(
                            tier.level,
                            subject,
                            f"jump_to_level {trig.jump_to_level} does not escalate from level {tier.level}",
                        )
                    )
            elif tier.level == LEVEL_MIN:
                out.append(
                    Violation(tier.level, subject, "level 1 has no next-lower level to escalate to")
                )
            if trig.kind in TIMER_TRIGGER_KINDS:
                target = trigger_target(tier.level, trig)
                if target is not None and target < org.max_auto_level:
                    out.append(
                        Violation(
                            tier.level,
                            trig.kind.value,
                            f"automatic escalation to level {target} is below the org floor "
                            f"(max_auto_level {org.max_auto_level})",
                        )
                    )
        for action in tier.actions:
            _check_params(_ACTION_PARAMS[action.kind], action.params, tier.level, action.kind.value, out)
            for kind, from_level in org.forbidden_actions:
                if action.kind == kind and tier.level >= from_level:
                    out.append(
                        Violation(
                            tier.level,
                            action.kind.value,
                            f"{action.kind.value} is forbidden by org policy at levels {from_level} and above",
                        )
                    )

    if not (LEVEL_MIN <= org.max_auto_level <= LEVEL_MAX):
        out.append(Violation(None, "org", f"max_auto_level {org.max_auto_level} outside 1..5"))
    for kind, from_level in org.forbidden_actions:
        if from_level not in LEVELS:
            out.append(
                Violation(None, "org", f"forbidden level {from_level} for {kind.value} outside 1..5")
            )

    return ValidationReport(out)


def serialize_policy(policy: SecurityPolicy) -> str:
    """Canonical JSON: sorted keys, compact separators, tiers in descending
    level order. Two structurally equal policies serialize byte-identically."""
    return canonical_json(policy.to_doc())


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def policy_digest(policy: SecurityPolicy) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(serialize_policy(policy).encode("utf-8")).hexdigest()


def _require(doc: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise PolicyError(f"{where}: missing {key}")
    return doc[key]


def _parse_trigger(doc: Any, where: str) -> TriggerSpec:
    if not isinstance(doc, dict):
        raise PolicyError(f"{where}: trigger must be an object")
    kind_name = _require(doc, "kind", where)
    try:
        kind = TriggerKind(kind_name)
    except ValueError:
        raise PolicyError(f"{where}: unknown trigger kind {kind_name!r}") from None
    jump = doc.get("jump_to_level")
    if jump is not None and not isinstance(jump, int):
        raise PolicyError(f"{where}: jump_to_level must be an integer")
    params = {k: v for k, v in doc.items() if k not in ("kind", "jump_to_level")}
    return TriggerSpec(kind, params, jump)


def _parse_action(doc: Any, where: str) -> ActionSpec:
    if not isinstance(doc, dict):
        raise PolicyError(f"{where}: action must be an object")
    kind_name = _require(doc, "kind", where)
    try:
        kind = ActionKind(kind_name)
    except ValueError:
        raise PolicyError(f"{where}: unknown action kind {kind_name!r}") from None
    params = {k: v for k, v in doc.items() if k != "kind"}
    return ActionSpec(kind, params)


def policy_from_doc(doc: Any) -> SecurityPolicy:
    if not isinstance(doc, dict):
        raise PolicyError("policy document must be a JSON object")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise PolicyError(f"unsupported schema version {schema!r} (expected {SCHEMA_VERSION})")
    if "tiers" not in doc:
        raise PolicyError("missing tiers")
    tiers_doc = doc["tiers"]
    if not isinstance(tiers_doc, list):
        raise PolicyError("tiers must be a list")

    tiers = []
    for i, tier_doc in enumerate(tiers_doc):
        where = f"tiers[{i}]"
        if not isinstance(tier_doc, dict):
            raise PolicyError(f"{where}: tier must be an object")
        level = _require(tier_doc, "level", where)
        if not isinstance(level, int):
            raise PolicyError(f"{where}: level must be an integer")
        triggers = tuple(
            _parse_trigger(t, f"{where}.escalation_triggers[{j}]")
            for j, t in enumerate(tier_doc.get("escalation_triggers", []))
        )
        actions = tuple(
            _parse_action(a, f"{where}.actions[{j}]")
            for j, a in enumerate(tier_doc.get("actions", []))
        )
        tiers.append(TierDefinition(level, triggers, actions))

    policy_id = doc.get("id", "unnamed")
    if not isinstance(policy_id, str):
        raise PolicyError("id must be a string")
    ack_interval = doc.get("ack_interval_seconds", DEFAULT_ACK_INTERVAL_S)
    ack_timeout = doc.get("ack_timeout_seconds", DEFAULT_ACK_TIMEOUT_S)
    for name, value in (("ack_interval_seconds", ack_interval), ("ack_timeout_seconds", ack_timeout)):
        if not isinstance(value, int) or isinstance(value, bool):
            raise PolicyError(f"{name} must be an integer")

    return SecurityPolicy(
        id=policy_id,
        tiers=tuple(sorted(tiers, key=lambda t: -t.level)),
        ack_interval_seconds=ack_interval,
        ack_timeout_seconds=ack_timeout,
    )


def parse_policy(text: str) -> SecurityPolicy:
    """Parse a policy JSON document.

    Raises PolicyError with the line/column for malformed JSON, and a
    descriptive message for structural problems (unknown kinds, wrong types,
    missing tiers). Completeness and org conformance are validate_policy's
    job, not the parser's.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyError(f"malformed policy document at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return policy_from_doc(doc)


def org_from_doc(doc: Any) -> OrgPolicy:
    if not isinstance(doc, dict):
        raise PolicyError("org policy document must be a JSON object")
    forbidden = []
    for i, entry in enumerate(doc.get("forbidden_actions", [])):
        where = f"forbidden_actions[{i}]"
        if not isinstance(entry, dict):
            raise PolicyError(f"{where}: must be an object")
        kind_name = _require(entry, "kind", where)
        try:
            kind = ActionKind(kind_name)
        except ValueError:
            raise PolicyError(f"{where}: unknown action kind {kind_name!r}") from None
        from_level = _require(entry, "from_level", where)
        if not isinstance(from_level, int):
            raise PolicyError(f"{where}: from_level must be an integer")
        forbidden.append((kind, from_level))
    max_auto = doc.get("max_auto_level", LEVEL_MIN)
    if not isinstance(max_auto, int) or isinstance(max_auto, bool):
        raise PolicyError("max_auto_level must be an integer")
    return OrgPolicy(tuple(forbidden), max_auto)


def parse_org_policy(text: str) -> OrgPolicy:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyError(f"malformed org policy at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return org_from_doc(doc)


class CompiledPolicy:
    """A validated policy indexed for the escalation engine.

    Exposes per-level tier lookup and each trigger's resolved target level.
    Construction fails on any structural violation so downstream code can
    assume a complete, well-formed ladder.
    """

    def __init__(self, policy: SecurityPolicy):
        report = validate_policy(policy)
        if not report.valid:
            raise PolicyError("cannot compile invalid policy: " + report.summary())
        self.policy = policy
        self.digest = policy_digest(policy)
        self._tiers = {t.level: t for t in policy.tiers}
        self._targets: dict[int, tuple[tuple[TriggerSpec, int], ...]] = {}
        for tier in policy.tiers:
            resolved = []
            for trig in tier.escalation_triggers:
                target = trigger_target(tier.level, trig)
                if target is not None:
                    resolved.append((trig, target))
            self._targets[tier.level] = tuple(resolved)

    @property
    def ack_interval_seconds(self) -> int:
        return self.policy.ack_interval_seconds

    @property
    def ack_timeout_seconds(self) -> int:
        return self.policy.ack_timeout_seconds

    def tier(self, level: int) -> TierDefinition:
        return self._tiers[level]

    def armed_triggers(self, level: int) -> Iterator[tuple[TriggerSpec, int]]:
        yield from self._targets[level]


def compile_policy(policy: SecurityPolicy) -> CompiledPolicy:
    return CompiledPolicy(policy)
