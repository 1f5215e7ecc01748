"""Command-line entry points.

``tiercon validate`` checks a policy document (optionally against an org
policy file), ``tiercon run`` executes a scenario deterministically and can
compare the trace against a committed golden file, ``tiercon serve`` runs the
manager (REST front end, agent TCP listener, optional in-process simulated
devices), ``tiercon agent`` attaches a simulated device to a remote manager,
and ``tiercon trigger`` is a small REST client for firing remote triggers.

Exit codes: 0 success, 1 validation or expectation failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
import urllib.error
import urllib.request

from tiercon.agent import AgentConfig
from tiercon.harness import ExpectationError, Scenario, ScenarioError, run_scenario
from tiercon.manager import (
    AccountRecord,
    DatabaseError,
    DeviceRecord,
    SecurityManager,
)
from tiercon.policy import (
    PERMISSIVE_ORG,
    PolicyError,
    build_default_policy,
    parse_org_policy,
    parse_policy,
    validate_policy,
)
from tiercon.trace import Trace, verify_trace


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        policy = parse_policy(_read(args.policy))
        org = parse_org_policy(_read(args.org)) if args.org else PERMISSIVE_ORG
    except (PolicyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = validate_policy(policy, org)
    print(report.summary())
    return 0 if report.valid else 1


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = Scenario.load(args.scenario)
    except (ScenarioError, OSError, PolicyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        trace = run_scenario(scenario)
    except ExpectationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(trace.to_jsonl())
    if args.golden:
        golden = Trace.from_jsonl(_read(args.golden))
        divergence = verify_trace(trace, golden)
        if divergence is not None:
            print(divergence.describe(), file=sys.stderr)
            return 1
        print(f"trace matches golden ({len(trace)} records)")
        return 0
    print(f"ok: {len(trace)} trace records")
    return 0


def _split_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def cmd_serve(args: argparse.Namespace) -> int:
    from tiercon.restapi import AgentServer, ManagerHub, make_rest_server

    start = time.monotonic()
    clock = lambda: int(time.monotonic() - start)  # noqa: E731

    try:
        manager = SecurityManager.load(args.db, clock=clock)
        print(f"loaded database {args.db}")
    except FileNotFoundError:
        manager = SecurityManager(clock=clock)
        manager.set_policy(build_default_policy())
        print(f"new database will be written to {args.db}")
    except DatabaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manager.operator_token = args.operator_token
    manager.confirm_token = args.confirm_token

    hub = ManagerHub(manager)
    for config_path in args.sim_device or []:
        config = AgentConfig.load(config_path)
        user = f"owner-{config.device_id}"
        if user not in manager.db.accounts:
            manager.register_account(AccountRecord(user, config.owner_credential_hash))
        if config.device_id not in manager.db.devices:
            manager.register_device(DeviceRecord(config.device_id, user, "default"))
        policy, _ = manager.get_policy(manager.device(config.device_id).policy_id)
        hub.attach_sim_agent(config, policy, now=clock())
        manager.push_config(config.device_id)
        print(f"simulated device attached: {config.device_id}")

    rest_host, rest_port = _split_addr(args.listen)
    rest = make_rest_server(hub, rest_host, rest_port)
    agent_host, agent_port = _split_addr(args.agent_listen) if args.agent_listen else (rest_host, 0)
    agents = AgentServer(hub, agent_host, agent_port)

    threading.Thread(target=rest.serve_forever, daemon=True).start()
    threading.Thread(target=agents.serve_forever, daemon=True).start()
    print(f"REST listening on {rest.server_address[0]}:{rest.server_address[1]}")
    print(f"agent protocol listening on {agents.server_address[0]}:{agents.server_address[1]}", flush=True)

    try:
        while True:
            time.sleep(1)
            hub.tick_sim_agents(clock())
            with hub.lock:
                manager.persist(args.db)
    except KeyboardInterrupt:
        pass
    finally:
        with hub.lock:
            manager.persist(args.db)
        rest.shutdown()
        agents.shutdown()
    return 0


def cmd_agent(args: argparse.Namespace) -> int:
    from tiercon.restapi import LiveAgentClient

    try:
        config = AgentConfig.load(args.config)
        policy = parse_policy(_read(args.policy)) if args.policy else build_default_policy()
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    client = LiveAgentClient(config, policy, _split_addr(args.manager))
    try:
        client.run_forever()
    except KeyboardInterrupt:
        client.stop()
    return 0


def cmd_trigger(args: argparse.Namespace) -> int:
    body = {"kind": args.kind}
    if args.level is not None:
        body["level"] = args.level
    if args.confirm is not None:
        body["confirm"] = args.confirm
    request = urllib.request.Request(
        f"{args.manager.rstrip('/')}/devices/{args.device}/trigger",
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json", "X-Auth-Token": args.token},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request) as response:
            print(response.read().decode("utf-8").strip())
        return 0
    except urllib.error.HTTPError as exc:
        print(f"error {exc.code}: {exc.read().decode('utf-8').strip()}", file=sys.stderr)
        return 1
    except urllib.error.URLError as exc:
        print(f"error: {exc.reason}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiercon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a policy document")
    p.add_argument("policy")
    p.add_argument("--org", help="org policy JSON file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="run a scenario deterministically")
    p.add_argument("scenario")
    p.add_argument("--golden", help="golden trace to compare against")
    p.add_argument("--out", help="write the trace (JSON lines) here")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="run the security manager")
    p.add_argument("--db", required=True, help="database JSON file")
    p.add_argument("--listen", default="127.0.0.1:8800", help="REST host:port")
    p.add_argument("--agent-listen", help="agent protocol host:port (default: ephemeral)")
    p.add_argument("--sim-device", action="append", help="agent config JSON for an in-process simulated device")
    p.add_argument("--operator-token", default="operator-token")
    p.add_argument("--confirm-token", default="CONFIRM-WIPE")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("agent", help="run a simulated device against a remote manager")
    p.add_argument("--config", required=True, help="agent config JSON")
    p.add_argument("--manager", required=True, help="manager agent-protocol host:port")
    p.add_argument("--policy", help="local policy document (defaults to the stock ladder)")
    p.set_defaults(fn=cmd_agent)

    p = sub.add_parser("trigger", help="fire a remote trigger over REST")
    p.add_argument("device")
    p.add_argument("kind", choices=["RemoteCall", "RemoteText", "RemoteEmail"])
    p.add_argument("--level", type=int, help="jump target level (1 requires --confirm)")
    p.add_argument("--confirm", help="confirmation token for level-1 jumps")
    p.add_argument("--manager", default="http://127.0.0.1:8800")
    p.add_argument("--token", default="operator-token", help="X-Auth-Token value")
    p.set_defaults(fn=cmd_trigger)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
