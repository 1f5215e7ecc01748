"""Per-device escalation engine.

Pure functions over an immutable ``DeviceState``: delivered events and clock
advancement both return a new state plus whatever transitions and action
commands they produced, so replaying the same inputs always yields the same
outputs. One logical owner (the device's agent, or the harness) drives each
state; nothing here performs I/O or executes actions.

Timing rules, fixed so replays are deterministic regardless of how coarsely
the clock is stepped:

* A timer whose deadline is ``<= now`` fires during ``advance_clock``; large
  jumps may chain several levels in one call.
* At the same instant, timer-driven triggers fire before externally delivered
  events (callers advance the clock to ``event.at`` before applying the
  event), acknowledgment timeouts fire before dwell timers, and transitions
  precede recurring ring re-emissions.
* Recurring ring commands re-emit every interval from the moment the ring
  action was entered, and only an authorized reset cancels them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping

from tiercon.crypto import CredentialError, verify_credential
from tiercon.policy import (
    ActionKind,
    ActionSpec,
    CompiledPolicy,
    SecurityPolicy,
    TriggerKind,
    TriggerSpec,
    compile_policy,
)


class EscalationError(Exception):
    pass


class TimeRegressionError(EscalationError):
    """An event or clock advance moved backwards in time."""


class ControlMode(str, Enum):
    SERVER_CONTROLLED = "ServerControlled"
    DEVICE_CONTROLLED = "DeviceControlled"


class EventKind(str, Enum):
    REMOTE_CALL = "RemoteCall"
    REMOTE_TEXT = "RemoteText"
    REMOTE_EMAIL = "RemoteEmail"
    CREDENTIAL_ENTRY = "CredentialEntry"
    ACK_RECEIVED = "AckReceived"
    CONNECTIVITY_LOST = "ConnectivityLost"
    CONNECTIVITY_RESTORED = "ConnectivityRestored"
    SENSITIVE_DATA_RECEIVED = "SensitiveDataReceived"
    CLOCK_TICK = "ClockTick"


#: Delivered-event kinds that can match policy triggers, and the trigger kind
#: each one satisfies.
_EVENT_TO_TRIGGER = {
    EventKind.REMOTE_CALL: TriggerKind.REMOTE_CALL,
    EventKind.REMOTE_TEXT: TriggerKind.REMOTE_TEXT,
    EventKind.REMOTE_EMAIL: TriggerKind.REMOTE_EMAIL,
    EventKind.CREDENTIAL_ENTRY: TriggerKind.CREDENTIAL_ENTRY,
    EventKind.SENSITIVE_DATA_RECEIVED: TriggerKind.SENSITIVE_DATA_RECEIPT,
}


@dataclass(frozen=True)
class Event:
    """Something delivered to the device at a virtual instant.

    ``target_level`` is set only on explicitly authorized jump requests (the
    confirmed "wipe now" call); it matches solely triggers marked with the
    same ``jump_to_level``.
    """

    kind: EventKind
    at: int
    payload: Mapping[str, Any] = field(default_factory=dict)
    target_level: int | None = None


@dataclass(frozen=True)
class ActionCommand:
    action: ActionSpec
    issued_at: int
    recurring: int | None = None  # interval seconds; Ring only

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"action": self.action.to_doc(), "issued_at": self.issued_at}
        if self.recurring is not None:
            doc["recurring"] = self.recurring
        return doc


@dataclass(frozen=True)
class CancelAllCommand:
    """Stop recurring actions and stand down; emitted by authorized_reset."""

    issued_at: int


@dataclass(frozen=True)
class Transition:
    from_level: int
    to_level: int
    at: int
    cause: str
    emitted_actions: tuple[ActionCommand, ...] = ()

    def to_doc(self, device_id: str) -> dict[str, Any]:
        return {
            "t": self.at,
            "device_id": device_id,
            "from": self.from_level,
            "to": self.to_level,
            "cause": self.cause,
            "actions": [c.to_doc() for c in self.emitted_actions],
        }


@dataclass(frozen=True)
class DeviceState:
    device_id: str
    level: int
    level_entered_at: int
    control_mode: ControlMode
    policy: CompiledPolicy
    ack_deadline: int | None = None
    last_observed: int = 0
    ring_interval: int | None = None
    ring_anchor: int | None = None

    def summary(self) -> dict[str, Any]:
        return {
            "device_id": self.device_id,
            "level": self.level,
            "level_entered_at": self.level_entered_at,
            "control_mode": self.control_mode.value,
            "ack_deadline": self.ack_deadline,
        }


def init_state(
    policy: SecurityPolicy | CompiledPolicy,
    now: int,
    mode: ControlMode,
    device_id: str = "device",
) -> DeviceState:
    """A fresh state at level 5 (normal readiness).

    Device-controlled states arm the acknowledgment deadline immediately;
    server-controlled states leave it unset. Raises PolicyError if the policy
    does not compile (missing levels, bad parameters).
    """
    compiled = policy if isinstance(policy, CompiledPolicy) else compile_policy(policy)
    ack_deadline = None
    if mode is ControlMode.DEVICE_CONTROLLED:
        ack_deadline = now + compiled.ack_timeout_seconds
    return DeviceState(
        device_id=device_id,
        level=5,
        level_entered_at=now,
        control_mode=mode,
        policy=compiled,
        ack_deadline=ack_deadline,
        last_observed=now,
    )


def _entry_commands(state: DeviceState, level: int, at: int) -> tuple[ActionCommand, ...]:
    commands = []
    for action in state.policy.tier(level).actions:
        recurring = None
        if action.kind is ActionKind.RING:
            recurring = action.param("ring_interval_seconds")
        commands.append(ActionCommand(action, at, recurring))
    return tuple(commands)


def _transition(state: DeviceState, target: int, at: int, cause: str) -> tuple[DeviceState, Transition]:
    commands = _entry_commands(state, target, at)
    ring_interval = state.ring_interval
    ring_anchor = state.ring_anchor
    for cmd in commands:
        if cmd.recurring is not None:
            ring_interval = cmd.recurring
            ring_anchor = at
    new_state = replace(
        state,
        level=target,
        level_entered_at=at,
        last_observed=at,
        ring_interval=ring_interval,
        ring_anchor=ring_anchor,
    )
    return new_state, Transition(state.level, target, at, cause, commands)


def _matches(trigger: TriggerSpec, event: Event) -> bool:
    expected = _EVENT_TO_TRIGGER.get(event.kind)
    if expected is None or trigger.kind is not expected:
        return False
    if trigger.jump_to_level is not None:
        if event.target_level != trigger.jump_to_level:
            return False
    elif event.target_level is not None:
        return False
    if trigger.kind is TriggerKind.CREDENTIAL_ENTRY:
        outcome = "success" if event.payload.get("success") else "failure"
        if trigger.param("on") != outcome:
            return False
    return True


def apply_event(state: DeviceState, event: Event) -> tuple[DeviceState, Transition | None]:
    """Deliver one event.

    Matches the event against the current tier's armed triggers (first match
    in policy order wins) and escalates if one fires. ``AckReceived`` pushes
    the acknowledgment deadline out by the policy timeout. Anything else
    leaves the state unchanged. Callers should advance_clock to ``event.at``
    first so same-instant timers win, per the tie-break rule.
    """
    if event.at < state.last_observed:
        raise TimeRegressionError(
            f"time regression: event at {event.at} after clock reached {state.last_observed}"
        )
    state = replace(state, last_observed=event.at)

    if event.kind is EventKind.ACK_RECEIVED:
        if state.ack_deadline is not None:
            state = replace(state, ack_deadline=event.at + state.policy.ack_timeout_seconds)
        return state, None

    if event.kind in (EventKind.CLOCK_TICK, EventKind.CONNECTIVITY_LOST, EventKind.CONNECTIVITY_RESTORED):
        return state, None

    for trigger, target in state.policy.armed_triggers(state.level):
        if _matches(trigger, event):
            return _transition(state, target, event.at, trigger.describe())
    return state, None


def set_control_mode(state: DeviceState, mode: ControlMode, now: int) -> DeviceState:
    """Switch who is in charge. Entering device control arms the
    acknowledgment deadline; returning to server control disarms it."""
    if now < state.last_observed:
        raise TimeRegressionError(f"time regression: {now} < {state.last_observed}")
    if mode is state.control_mode:
        return replace(state, last_observed=now)
    ack_deadline = None
    if mode is ControlMode.DEVICE_CONTROLLED:
        ack_deadline = now + state.policy.ack_timeout_seconds
    return replace(state, control_mode=mode, ack_deadline=ack_deadline, last_observed=now)


def _armed_timer(state: DeviceState, kind: TriggerKind) -> tuple[TriggerSpec, int] | None:
    for trigger, target in state.policy.armed_triggers(state.level):
        if trigger.kind is kind:
            return trigger, target
    return None


def _next_timer(state: DeviceState) -> tuple[int, int, TriggerSpec, int] | None:
    """The earliest due timer as (due_at, priority, trigger, target).

    Priority breaks same-instant ties: acknowledgment timeout (0) before
    dwell (1) before scheduled datetimes (2).
    """
    candidates: list[tuple[int, int, TriggerSpec, int]] = []
    if state.ack_deadline is not None:
        armed = _armed_timer(state, TriggerKind.ACK_TIMEOUT)
        if armed is not None:
            trigger, target = armed
            candidates.append((max(state.ack_deadline, state.last_observed), 0, trigger, target))
    armed = _armed_timer(state, TriggerKind.DWELL_ELAPSED)
    if armed is not None:
        trigger, target = armed
        due = state.level_entered_at + trigger.param("dwell_seconds")
        candidates.append((max(due, state.last_observed), 1, trigger, target))
    for trigger, target in state.policy.armed_triggers(state.level):
        if trigger.kind is TriggerKind.SCHEDULED_DATETIME:
            candidates.append((max(trigger.param("at"), state.last_observed), 2, trigger, target))
    if not candidates:
        return None
    return min(candidates, key=lambda c: (c[0], c[1]))


def _ring_emissions(state: DeviceState, upto: int) -> tuple[list[ActionCommand], DeviceState]:
    """Ring re-emissions due in (last_observed, upto], advancing the anchor."""
    if state.ring_interval is None or state.ring_anchor is None:
        return [], state
    commands = []
    interval, anchor = state.ring_interval, state.ring_anchor
    ring_action = ActionSpec(ActionKind.RING, {"ring_interval_seconds": interval})
    due = anchor + interval
    while due <= upto:
        if due > state.last_observed:
            commands.append(ActionCommand(ring_action, due, interval))
        anchor = due
        due = anchor + interval
    return commands, replace(state, ring_anchor=anchor)


def advance_clock(state: DeviceState, now: int) -> tuple[DeviceState, list[Transition], list[ActionCommand]]:
    """Advance virtual time to ``now``, firing everything that came due.

    Fires dwell, acknowledgment-timeout, and scheduled triggers in deadline
    order (chaining through multiple levels if the jump is large), and
    re-emits recurring ring commands due in the advanced window. Splitting an
    advance into smaller steps yields the same transitions and commands.
    """
    if now < state.last_observed:
        raise TimeRegressionError(f"time regression: {now} < {state.last_observed}")

    transitions: list[Transition] = []
    commands: list[ActionCommand] = []

    while True:
        timer = _next_timer(state)
        if timer is None or timer[0] > now:
            break
        due_at, _prio, trigger, target = timer
        rings, state = _ring_emissions(state, due_at)
        commands.extend(rings)
        if trigger.kind is TriggerKind.ACK_TIMEOUT:
            # Re-arm so a chain of ack-timeout tiers keeps its cadence.
            state = replace(state, ack_deadline=due_at + state.policy.ack_timeout_seconds)
        state, transition = _transition(state, target, due_at, trigger.describe())
        transitions.append(transition)

    rings, state = _ring_emissions(state, now)
    commands.extend(rings)
    state = replace(state, last_observed=now)
    return state, transitions, commands


def forced_transition(
    state: DeviceState, target_level: int, at: int, cause: str
) -> tuple[DeviceState, Transition]:
    """An authorized server-directed move to a more severe level, executing
    the destination tier's entry actions exactly as a trigger would."""
    if at < state.last_observed:
        raise TimeRegressionError(f"time regression: {at} < {state.last_observed}")
    if target_level >= state.level:
        raise EscalationError(
            f"forced transition must escalate: {target_level} is not below {state.level}"
        )
    return _transition(state, target_level, at, cause)


def next_deadline(state: DeviceState) -> int | None:
    """Earliest pending instant: timer deadline or ring re-emission. Lets a
    scheduler step the clock to exactly the moments something happens."""
    candidates = []
    timer = _next_timer(state)
    if timer is not None:
        candidates.append(timer[0])
    if state.ring_interval is not None and state.ring_anchor is not None:
        candidates.append(state.ring_anchor + state.ring_interval)
    return min(candidates) if candidates else None


def swap_policy(state: DeviceState, compiled: CompiledPolicy, now: int) -> DeviceState:
    """Adopt a freshly pushed policy without disturbing level or timers."""
    if now < state.last_observed:
        raise TimeRegressionError(f"time regression: {now} < {state.last_observed}")
    return replace(state, policy=compiled, last_observed=now)


def authorized_reset(
    state: DeviceState, credential: str, owner_credential_hash: str, now: int
) -> tuple[DeviceState, Transition, CancelAllCommand]:
    """Stand the device down to level 5 after proof of ownership.

    Clears timers and recurring actions. Storage effects of past actions are
    not undone; recovery of wiped data is exactly what the wipe prevents.
    Raises CredentialError on a bad credential, leaving the state untouched
    (callers record the failed attempt as a CredentialEntry event).
    """
    if now < state.last_observed:
        raise TimeRegressionError(f"time regression: {now} < {state.last_observed}")
    if not verify_credential(credential, owner_credential_hash):
        raise CredentialError("authorized reset rejected: credential mismatch")
    ack_deadline = None
    if state.control_mode is ControlMode.DEVICE_CONTROLLED:
        ack_deadline = now + state.policy.ack_timeout_seconds
    new_state = replace(
        state,
        level=5,
        level_entered_at=now,
        ack_deadline=ack_deadline,
        last_observed=now,
        ring_interval=None,
        ring_anchor=None,
    )
    transition = Transition(state.level, 5, now, "authorized_reset", ())
    return new_state, transition, CancelAllCommand(now)
