"""Shared test utilities: seeded generators for valid policies and file data."""

from __future__ import annotations

import random

from tiercon.policy import (
    ActionKind,
    ActionSpec,
    SecurityPolicy,
    TierDefinition,
    TriggerKind,
    TriggerSpec,
)

_WORDS = ["alpha", "bravo", "café", "kiosk", "meridian", "osprey", "quartz", "señal", "tundra"]

_EVENT_TRIGGERS = [
    TriggerKind.REMOTE_CALL,
    TriggerKind.REMOTE_TEXT,
    TriggerKind.REMOTE_EMAIL,
    TriggerKind.CREDENTIAL_ENTRY,
    TriggerKind.SENSITIVE_DATA_RECEIPT,
]

_FUNCTION_FLAGS = ["call_placement", "data_viewing", "email", "browsing"]


def random_text(rng: random.Random) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 5)))


def random_trigger(rng: random.Random, level: int) -> TriggerSpec:
    roll = rng.random()
    if roll < 0.5:
        kind = rng.choice(_EVENT_TRIGGERS)
        params = {}
        if kind is TriggerKind.CREDENTIAL_ENTRY:
            params = {"on": rng.choice(["success", "failure"])}
    elif roll < 0.7:
        kind = TriggerKind.DWELL_ELAPSED
        params = {"dwell_seconds": rng.randint(1, 100_000)}
    elif roll < 0.9:
        kind = TriggerKind.ACK_TIMEOUT
        params = {"timeout_seconds": rng.randint(1, 100_000)}
    else:
        kind = TriggerKind.SCHEDULED_DATETIME
        params = {"at": rng.randint(0, 1_000_000)}
    jump = None
    if level > 1 and rng.random() < 0.25:
        jump = rng.randint(1, level - 1)
    return TriggerSpec(kind, params, jump)


def random_action(rng: random.Random) -> ActionSpec:
    kind = rng.choice(list(ActionKind))
    params = {}
    if kind is ActionKind.RING:
        params = {"ring_interval_seconds": rng.randint(1, 600)}
    elif kind in (ActionKind.SEND_TEXT, ActionKind.PLAY_RECORDED_CALL):
        params = {"message": random_text(rng)}
    elif kind is ActionKind.FORCE_OUTGOING_CALLS:
        params = {"number": "+1-555-%04d" % rng.randint(0, 9999)}
    elif kind is ActionKind.FORCE_URL:
        params = {"url": f"https://{rng.choice(_WORDS)}.example/{rng.randint(0, 99)}"}
    elif kind is ActionKind.DISABLE_FUNCTIONS:
        params = {"functions": rng.sample(_FUNCTION_FLAGS, rng.randint(1, 4))}
    elif kind is ActionKind.OVERWRITE_DELETED:
        if rng.random() < 0.5:
            params = {"pattern": rng.randint(0, 255)}
    elif kind is ActionKind.REDELETE:
        params = {"passes": rng.randint(1, 5)}
    return ActionSpec(kind, params)


def random_valid_policy(rng: random.Random) -> SecurityPolicy:
    """A structurally valid random policy (passes validate_policy against the
    permissive org)."""
    tiers = []
    for level in (5, 4, 3, 2, 1):
        triggers = ()
        if level > 1:
            triggers = tuple(random_trigger(rng, level) for _ in range(rng.randint(1, 3)))
        actions = ()
        if level < 5:
            actions = tuple(random_action(rng) for _ in range(rng.randint(0, 4)))
        tiers.append(TierDefinition(level, triggers, actions))
    return SecurityPolicy(
        id=f"policy-{rng.randrange(1_000_000)}",
        tiers=tuple(tiers),
        ack_interval_seconds=rng.randint(60, 3600),
        ack_timeout_seconds=rng.randint(600, 14400),
    )


def random_file_bytes(rng: random.Random, size: int) -> bytes:
    """File content that never contains 0x00 or 0xFF, so no 4-gram of it can
    be mistaken for overwrite fill."""
    return bytes(rng.randint(1, 254) for _ in range(size))


def silent_escalation_instants(policy: SecurityPolicy) -> list[int]:
    """Cumulative escalation times for a device-controlled device that never
    acks, computed by summing the policy's own durations. Independent oracle
    for the state machine's timer chain."""
    instants = []
    t = 0
    for trig in policy.tier(5).escalation_triggers:
        if trig.kind is TriggerKind.ACK_TIMEOUT:
            t += trig.param("timeout_seconds")
            instants.append(t)
            break
    for level in (4, 3, 2):
        for trig in policy.tier(level).escalation_triggers:
            if trig.kind is TriggerKind.DWELL_ELAPSED:
                t += trig.param("dwell_seconds")
                instants.append(t)
                break
    return instants
