#!/usr/bin/env python3
"""Walk the stock ladder with a silent, device-controlled phone.

The device starts at level 5 with the acknowledgment dead-man armed. Nobody
answers a single prompt, so it times out to level 4 after two hours, dwells
down to 3, 2, and finally 1, where storage is wiped. Prints a narrated
timeline straight from the trace.
"""

from tiercon.harness import Scenario, run_scenario

scenario = Scenario.from_doc(
    {
        "seed": 1,
        "policy": "default",
        "devices": [
            {
                "device_id": "quiet-phone",
                "owner_credential": "owner-secret",
                "mode": "DeviceControlled",
                "hybrid": False,
                "files": [
                    {"name": "ledger.db", "text": "account 4411 pin 9962", "sensitive": True},
                    {"name": "todo.txt", "text": "water the plants"},
                ],
            }
        ],
        "script": [{"t": 32400, "do": "advance_to"}],
    }
)

trace = run_scenario(scenario)

def hhmm(t):
    return f"{t // 3600:02d}:{t % 3600 // 60:02d}"

print("silent device, no acknowledgments, nine hours:\n")
for record in trace:
    if record["type"] == "transition":
        actions = ", ".join(a["action"]["kind"] for a in record["actions"]) or "none"
        print(f"{hhmm(record['t'])}  level {record['from']} -> {record['to']}  ({record['cause']})")
        print(f"          actions: {actions}")

prompts = trace.of_type("prompt")
rings = [r for r in trace.of_type("action") if r["action"]["kind"] == "Ring"]
print(f"\n{len(prompts)} acknowledgment prompts went unanswered")
print(f"{len(rings)} ring commands fired (one per minute from level 4 on)")
