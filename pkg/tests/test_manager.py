import json

import pytest

from tiercon.crypto import hash_credential
from tiercon.manager import (
    AccountRecord,
    AuthError,
    DatabaseError,
    DeviceRecord,
    ManagerError,
    OrgPolicyViolation,
    SecurityManager,
)
from tiercon.policy import (
    ActionKind,
    OrgPolicy,
    build_default_policy,
    policy_digest,
)
from tiercon.protocol import Envelope, MsgType, ProtocolError

OWNER = "owner-secret"


def make_manager(transport=None, clock=None):
    manager = SecurityManager(
        operator_token="op-token",
        confirm_token="CONFIRM-WIPE",
        clock=clock or (lambda: 1000),
        transport=transport or (lambda device_id, env: True),
    )
    manager.set_policy(build_default_policy())
    manager.register_account(AccountRecord("alice", hash_credential(OWNER)))
    manager.register_device(DeviceRecord("d1", "alice", "default"))
    return manager


class TestRegistration:
    def test_register_and_lookup(self):
        manager = make_manager()
        assert manager.device("d1").owner_user == "alice"

    def test_duplicate_device_rejected(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="already registered"):
            manager.register_device(DeviceRecord("d1", "alice", "default"))

    def test_unknown_device(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="no such device"):
            manager.device("ghost")


class TestPolicyStore:
    def test_set_policy_bumps_revision(self):
        manager = make_manager()
        report, revision = manager.set_policy(build_default_policy())
        assert report.valid and revision == 2

    def test_revision_conflict(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="revision conflict"):
            manager.set_policy(build_default_policy(), expected_revision=7)

    def test_org_invalid_policy_not_stored(self):
        manager = make_manager()
        manager.set_org_policy(OrgPolicy(forbidden_actions=((ActionKind.DELETE_ALL, 1),)))
        report, revision = manager.set_policy(build_default_policy())
        assert not report.valid
        assert revision == 1  # unchanged


class TestPushConfig:
    def test_push_carries_digest_and_level(self):
        sent = []
        manager = make_manager(transport=lambda d, e: sent.append(e) or True)
        result = manager.push_config("d1")
        assert result["delivered"]
        env = sent[-1]
        assert env.msg_type is MsgType.CONFIG_PUSH
        assert env.body["digest"] == policy_digest(build_default_policy())
        assert env.body["level"] == 5

    def test_push_refused_when_org_invalid(self):
        manager = make_manager()
        manager.set_org_policy(OrgPolicy(forbidden_actions=((ActionKind.DELETE_ALL, 1),)))
        with pytest.raises(OrgPolicyViolation) as exc:
            manager.push_config("d1")
        assert any(v.subject == "DeleteAll" for v in exc.value.report.violations)

    def test_push_to_unknown_device(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="no such device"):
            manager.push_config("ghost")

    def test_push_to_unreachable_device_queues(self):
        manager = make_manager(transport=lambda d, e: False)
        result = manager.push_config("d1")
        assert result["queued"]
        assert len(manager.device("d1").queued) == 1


class TestRemoteTrigger:
    def test_operator_token_accepted(self):
        sent = []
        manager = make_manager(transport=lambda d, e: sent.append(e) or True)
        result = manager.remote_trigger("d1", "RemoteCall", auth="op-token")
        assert result["delivered"]
        assert sent[-1].body == {"kind": "RemoteCall"}

    def test_owner_credential_accepted(self):
        manager = make_manager()
        assert manager.remote_trigger("d1", "RemoteCall", auth=OWNER)["delivered"]

    def test_unauthenticated_rejected_and_logged(self):
        manager = make_manager()
        with pytest.raises(AuthError):
            manager.remote_trigger("d1", "RemoteCall", auth="bad")
        log = manager.device("d1").audit_log
        assert log and log[-1]["event"] == "trigger_rejected"
        assert log[-1]["reason"] == "unauthenticated"

    def test_level_1_requires_confirmation(self):
        manager = make_manager()
        with pytest.raises(AuthError, match="confirmation"):
            manager.remote_trigger("d1", "RemoteCall", auth="op-token", level=1)
        log = manager.device("d1").audit_log
        assert log[-1]["reason"] == "missing_confirmation"

    def test_level_1_with_confirmation(self):
        sent = []
        manager = make_manager(transport=lambda d, e: sent.append(e) or True)
        result = manager.remote_trigger(
            "d1", "RemoteCall", auth="op-token", level=1, confirm="CONFIRM-WIPE"
        )
        assert result["delivered"]
        assert sent[-1].body == {"kind": "RemoteCall", "target_level": 1}

    def test_unsupported_kind(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="unsupported remote trigger"):
            manager.remote_trigger("d1", "AckTimeout", auth="op-token")

    def test_unreachable_device_queues_trigger(self):
        manager = make_manager(transport=lambda d, e: False)
        result = manager.remote_trigger("d1", "RemoteCall", auth="op-token")
        assert result["queued"] and not result["delivered"]
        assert manager.device("d1").queued


class TestFileDelete:
    def test_names_validated(self):
        manager = make_manager()
        with pytest.raises(ManagerError, match="non-empty"):
            manager.remote_file_delete("d1", [], auth="op-token")

    def test_envelope_carries_names(self):
        sent = []
        manager = make_manager(transport=lambda d, e: sent.append(e) or True)
        manager.remote_file_delete("d1", ["a.txt", "b.txt"], auth="op-token")
        assert sent[-1].body == {"kind": "FileDelete", "names": ["a.txt", "b.txt"]}

    def test_delivered_delete_lands_in_trace(self):
        manager = make_manager()
        manager.remote_file_delete("d1", ["a.txt"], auth="op-token")
        tail = manager.device("d1").trace[-1]
        assert tail["type"] == "file_delete" and tail["names"] == ["a.txt"]

    def test_queued_delete_not_in_trace_yet(self):
        manager = make_manager(transport=lambda d, e: False)
        manager.remote_file_delete("d1", ["a.txt"], auth="op-token")
        assert manager.device("d1").trace == []


class TestHandleAgentMessage:
    def test_heartbeat_updates_record(self):
        manager = make_manager()
        env = Envelope(MsgType.HEARTBEAT, "d1", 1, {"level": 4, "mode": "ServerControlled"}, 777)
        replies = manager.handle_agent_message(env)
        record = manager.device("d1")
        assert record.last_heartbeat == 777
        assert record.level == 4
        assert [r.msg_type for r in replies] == [MsgType.HEARTBEAT]

    def test_unknown_device_is_protocol_error(self):
        manager = make_manager()
        env = Envelope(MsgType.HEARTBEAT, "ghost", 1, {}, 0)
        with pytest.raises(ProtocolError, match="unknown device"):
            manager.handle_agent_message(env)

    def test_duplicate_seq_is_idempotent(self):
        manager = make_manager()
        report = Envelope(
            MsgType.USAGE_REPORT,
            "d1",
            1,
            {"entries": [{"t": 5, "kind": "CallPlaced", "detail": "+1", "n": 0}], "transitions": []},
            5,
        )
        manager.handle_agent_message(report)
        assert manager.handle_agent_message(report) == []
        audit = [e for e in manager.device("d1").audit_log if e.get("kind") == "CallPlaced"]
        assert len(audit) == 1

    def test_usage_entry_dedupe_across_envelopes(self):
        manager = make_manager()
        entry = {"t": 5, "kind": "CallPlaced", "detail": "+1", "n": 0}
        manager.handle_agent_message(Envelope(MsgType.USAGE_REPORT, "d1", 1, {"entries": [entry], "transitions": []}, 5))
        manager.handle_agent_message(Envelope(MsgType.USAGE_REPORT, "d1", 2, {"entries": [entry], "transitions": []}, 6))
        audit = [e for e in manager.device("d1").audit_log if e.get("kind") == "CallPlaced"]
        assert len(audit) == 1

    def test_sync_digest_equal_answers_digest_only(self):
        manager = make_manager()
        digest = policy_digest(build_default_policy())
        replies = manager.handle_agent_message(
            Envelope(MsgType.SYNC_DIGEST, "d1", 1, {"digest": digest, "level": 5, "as_of": 10}, 10)
        )
        assert [r.msg_type for r in replies] == [MsgType.SYNC_DIGEST]

    def test_sync_digest_mismatch_answers_with_config_push(self):
        manager = make_manager()
        replies = manager.handle_agent_message(
            Envelope(MsgType.SYNC_DIGEST, "d1", 1, {"digest": "stale", "level": 5, "as_of": 10}, 10)
        )
        assert [r.msg_type for r in replies] == [MsgType.SYNC_DIGEST, MsgType.CONFIG_PUSH]

    def test_queued_envelopes_ride_ahead_of_sync_reply(self):
        manager = make_manager(transport=lambda d, e: False)
        manager.remote_trigger("d1", "RemoteCall", auth="op-token", level=1, confirm="CONFIRM-WIPE")
        replies = manager.handle_agent_message(
            Envelope(MsgType.SYNC_DIGEST, "d1", 1, {"digest": "stale", "level": 2, "as_of": 10}, 10)
        )
        assert [r.msg_type for r in replies] == [
            MsgType.TRIGGER,
            MsgType.SYNC_DIGEST,
            MsgType.CONFIG_PUSH,
        ]
        assert manager.device("d1").queued == []

    def test_transition_reports_update_trace_and_state(self):
        manager = make_manager()
        transition = {"t": 50, "device_id": "d1", "from": 5, "to": 4, "cause": "RemoteCall", "actions": []}
        manager.handle_agent_message(
            Envelope(MsgType.USAGE_REPORT, "d1", 1, {"entries": [], "transitions": [transition]}, 50)
        )
        record = manager.device("d1")
        assert record.trace == [transition]
        assert record.level == 4
        # Re-reporting the same transition leaves a single trace entry.
        manager.handle_agent_message(
            Envelope(MsgType.USAGE_REPORT, "d1", 2, {"entries": [], "transitions": [transition]}, 60)
        )
        assert record.trace == [transition]


class TestAuditReplay:
    def test_trace_replay_matches_stored_level(self):
        # Replaying the reported transition chain through the escalation
        # rules must land on the stored level (audit-replay equivalence).
        manager = make_manager()
        docs = [
            {"t": 10, "device_id": "d1", "from": 5, "to": 4, "cause": "RemoteCall", "actions": []},
            {"t": 3610, "device_id": "d1", "from": 4, "to": 3, "cause": "DwellElapsed(dwell_seconds=3600)", "actions": []},
        ]
        for i, doc in enumerate(docs):
            manager.handle_agent_message(
                Envelope(MsgType.USAGE_REPORT, "d1", i + 1, {"entries": [], "transitions": [doc]}, doc["t"])
            )
        record = manager.device("d1")
        level = 5
        for doc in record.trace:
            if "from" not in doc:
                continue  # storage-effect records do not move the level
            assert doc["from"] == level
            level = doc["to"]
        assert level == record.level == 3


class TestPersistence:
    def populate(self, manager):
        from dataclasses import replace

        manager.set_policy(build_default_policy(contact_number="+1-555-0111"))
        manager.set_policy(replace(build_default_policy(), id="strict"))
        manager.register_account(AccountRecord("bob", hash_credential("b"), {"bank": "ref:vault/77"}))
        manager.register_device(DeviceRecord("d2", "bob", "default"))
        manager.register_device(DeviceRecord("d3", "bob", "strict"))
        manager.device("d1").trace.append(
            {"t": 1, "device_id": "d1", "from": 5, "to": 4, "cause": "RemoteCall", "actions": []}
        )

    def test_round_trip(self, tmp_path):
        manager = make_manager()
        self.populate(manager)
        path = tmp_path / "db.json"
        manager.persist(str(path))
        loaded = SecurityManager.load(str(path))
        assert loaded.db.to_doc() == manager.db.to_doc()

    def test_empty_round_trip(self, tmp_path):
        manager = SecurityManager()
        path = tmp_path / "db.json"
        manager.persist(str(path))
        assert SecurityManager.load(str(path)).db.to_doc() == manager.db.to_doc()

    def test_truncated_file(self, tmp_path):
        manager = make_manager()
        path = tmp_path / "db.json"
        manager.persist(str(path))
        path.write_text(path.read_text()[: len(path.read_text()) // 2])
        with pytest.raises(DatabaseError, match="unreadable"):
            SecurityManager.load(str(path))

    def test_corrupt_section_named(self, tmp_path):
        manager = make_manager()
        path = tmp_path / "db.json"
        manager.persist(str(path))
        doc = json.loads(path.read_text())
        doc["devices"]["d1"] = {"bogus": True}
        path.write_text(json.dumps(doc))
        with pytest.raises(DatabaseError, match="devices"):
            SecurityManager.load(str(path))

    def test_secrets_stored_as_references_only(self, tmp_path):
        manager = make_manager()
        manager.register_account(
            AccountRecord("carol", hash_credential("pw"), {"bank": "ref:vault/42"})
        )
        path = tmp_path / "db.json"
        manager.persist(str(path))
        text = path.read_text()
        assert "ref:vault/42" in text
        assert "pw" not in json.loads(text)["accounts"]["carol"]["credential_hash"]
