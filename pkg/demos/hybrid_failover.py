#!/usr/bin/env python3
"""Hybrid control handoff, narrated from the protocol trace.

A connected device heartbeats every 30 s and is never prompted. The network
drops at t=100; after three missed beats the device takes control of itself
and starts asking its user for acknowledgments. While it is cut off, the
operator both edits the policy and fires a remote call. On reconnect the
queued trigger lands first, then the digest exchange notices the edit and
pulls fresh configuration, and only then does the server take back control;
the prompts stop.
"""

from tiercon.harness import Scenario, run_scenario
from tiercon.policy import build_default_policy

edited = build_default_policy(contact_number="+1-555-0199").to_doc()

scenario = Scenario.from_doc(
    {
        "seed": 5,
        "policy": "default",
        "devices": [
            {
                "device_id": "roaming-phone",
                "owner_credential": "owner-secret",
                "mode": "ServerControlled",
                "hybrid": True,
                "heartbeat": {"interval_s": 30, "missed_threshold": 3},
            }
        ],
        "script": [
            {"t": 100, "do": "network_down"},
            {"t": 200, "do": "set_policy", "policy": edited},
            {"t": 210, "do": "remote_trigger", "device": "roaming-phone", "kind": "RemoteCall"},
            {"t": 500, "do": "network_up"},
            {"t": 900, "do": "advance_to"},
        ],
    }
)

trace = run_scenario(scenario)

print("what went over the wire (and what it caused):\n")
for record in trace:
    t, kind = record.get("t"), record["type"]
    if kind == "mode":
        print(f"t={t:<5} control -> {record['mode']} ({record['reason']})")
    elif kind == "transition":
        print(f"t={t:<5} level {record['from']} -> {record['to']} ({record['cause']})")
    elif kind == "prompt":
        print(f"t={t:<5} device prompts user for acknowledgment")
    elif kind == "envelope" and record["msg"] in ("TRIGGER", "SYNC_DIGEST", "CONFIG_PUSH"):
        flag = " (dropped)" if record.get("dropped") else ""
        info = record.get("info", {})
        digest = info.get("digest", "")
        digest = f" digest={digest[:8]}…" if digest else ""
        print(f"t={t:<5} {record['msg']:<11} {record['dir']}{digest}{flag}")
