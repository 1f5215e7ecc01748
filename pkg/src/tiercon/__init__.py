"""Tiered security for mobile devices.

A five-level escalation system (level 5 = normal readiness, level 1 =
maximum): user-defined triggers move a device down the ladder, each level
entry executes its configured security actions, and a dead-man acknowledgment
switch plus dwell timers keep escalating on their own when the device is cut
off from its server.

Subsystems:

* :mod:`tiercon.policy` -- tier/trigger/action definitions, validation,
  canonical JSON serialization and digests.
* :mod:`tiercon.escalation` -- the per-device escalation state machine.
* :mod:`tiercon.storage`, :mod:`tiercon.device` -- cluster-addressed
  simulated storage and the device action catalog (ring, lock, encrypt,
  delete, overwrite, re-delete, ...), with a forensic scan oracle.
* :mod:`tiercon.agent` -- the on-device security agent: connectivity
  monitoring, server/device control handoff, acknowledgment prompting.
* :mod:`tiercon.manager`, :mod:`tiercon.protocol`, :mod:`tiercon.restapi` --
  the server-side security manager, its length-prefixed JSON wire protocol,
  and the REST API used by the CLI and the operator console.
* :mod:`tiercon.harness` -- deterministic virtual-clock scenario runner
  producing replayable traces.
"""

__version__ = "0.1.0"

from tiercon.policy import (
    ActionKind,
    ActionSpec,
    OrgPolicy,
    PolicyError,
    SecurityPolicy,
    TierDefinition,
    TriggerKind,
    TriggerSpec,
    ValidationReport,
    build_default_policy,
    parse_policy,
    policy_digest,
    serialize_policy,
    validate_policy,
)

__all__ = [
    "ActionKind",
    "ActionSpec",
    "OrgPolicy",
    "PolicyError",
    "SecurityPolicy",
    "TierDefinition",
    "TriggerKind",
    "TriggerSpec",
    "ValidationReport",
    "build_default_policy",
    "parse_policy",
    "policy_digest",
    "serialize_policy",
    "validate_policy",
]
