import random

import pytest
from helpers import random_file_bytes

from tiercon.crypto import IntegrityError
from tiercon.device import ALL, SENSITIVE, ActionError, LockState, SimDevice
from tiercon.escalation import ActionCommand
from tiercon.policy import ActionKind, ActionSpec
from tiercon.storage import SimStorage, StorageError


def cmd(kind, params=None, t=0):
    return ActionCommand(ActionSpec(kind, params or {}), t)


def make_device(secure_clusters=128, key=b"k" * 32, seed="d1"):
    storage = SimStorage(cluster_count=256, cluster_size=64, secure_clusters=secure_clusters)
    return SimDevice("d1", storage=storage, enc_key=key, rng=random.Random(seed))


def seed_files(device, rng=None):
    rng = rng or random.Random(11)
    device.inject_file("notes.txt", b"SECRET123 plans for the quarter", sensitive=True)
    device.inject_file("accounts.db", random_file_bytes(rng, 300), sensitive=True)
    device.inject_file("podcast.mp3", random_file_bytes(rng, 500))
    device.inject_file("todo.txt", b"buy milk, fix bike", sensitive=False)
    device.inject_file("photo.jpg", random_file_bytes(rng, 200))


def clusters_of(device, names):
    got = set()
    for n in names:
        got.update(device.storage.files[n].clusters)
    return got


class TestStorageBasics:
    def test_round_trip(self):
        device = make_device()
        content = random_file_bytes(random.Random(1), 777)
        device.inject_file("blob", content)
        assert device.storage.read_file("blob") == content

    def test_live_files_never_share_clusters(self):
        device = make_device()
        seed_files(device)
        seen = set()
        for entry in device.storage.files.values():
            assert not (seen & set(entry.clusters))
            seen.update(entry.clusters)

    def test_duplicate_name_rejected(self):
        device = make_device()
        device.inject_file("a", b"x")
        with pytest.raises(StorageError, match="exists"):
            device.inject_file("a", b"y")

    def test_storage_full(self):
        storage = SimStorage(cluster_count=4, cluster_size=16, secure_clusters=1)
        storage.write_file("a", b"z" * 48)
        with pytest.raises(StorageError, match="full"):
            storage.write_file("b", b"z")


class TestPartitionSensitive:
    def test_moves_only_sensitive(self):
        device = make_device()
        seed_files(device)
        non_sensitive = ["podcast.mp3", "todo.txt", "photo.jpg"]
        before = device.storage.snapshot()
        untouched_clusters = clusters_of(device, non_sensitive)
        vacated = clusters_of(device, ["notes.txt", "accounts.db"])

        moved = device.partition_sensitive()

        assert moved == 2
        after = device.storage.snapshot()
        size = device.storage.cluster_size
        for c in untouched_clusters:
            assert after[c * size : (c + 1) * size] == before[c * size : (c + 1) * size]
        for name in ("notes.txt", "accounts.db"):
            entry = device.storage.files[name]
            assert all(device.storage.in_secure_region(c) for c in entry.clusters)
        # Vacated clusters joined the freed set with bytes intact.
        assert vacated <= device.storage.freed
        for c in vacated:
            assert after[c * size : (c + 1) * size] == before[c * size : (c + 1) * size]

    def test_no_sensitive_files_is_noop(self):
        device = make_device()
        device.inject_file("a", b"hello world")
        before = device.storage.snapshot()
        assert device.partition_sensitive() == 0
        assert device.storage.snapshot() == before

    def test_insufficient_secure_space_moves_nothing(self):
        device = make_device(secure_clusters=2)
        device.inject_file("big", random_file_bytes(random.Random(3), 64 * 5), sensitive=True)
        before = device.storage.snapshot()
        table_before = {n: list(e.clusters) for n, e in device.storage.files.items()}
        with pytest.raises(ActionError, match="secure region too small"):
            device.partition_sensitive()
        assert device.storage.snapshot() == before
        assert {n: list(e.clusters) for n, e in device.storage.files.items()} == table_before

    def test_already_partitioned_not_moved_again(self):
        device = make_device()
        device.inject_file("s", b"classified", sensitive=True)
        assert device.partition_sensitive() == 1
        assert device.partition_sensitive() == 0


class TestEncryption:
    def test_round_trip_restores_bytes(self):
        device = make_device()
        seed_files(device)
        original = device.storage.read_file("notes.txt")
        assert device.encrypt_files(["notes.txt"]) == 1
        assert device.storage.files["notes.txt"].encrypted
        assert device.storage.read_file("notes.txt") != original
        assert device.decrypt_files(["notes.txt"]) == 1
        assert device.storage.read_file("notes.txt") == original

    def test_ciphertext_differs_across_nonces(self):
        device = make_device()
        device.inject_file("one", b"same content here", sensitive=True)
        device.inject_file("two", b"same content here", sensitive=True)
        device.encrypt_files(SENSITIVE)
        ct1 = device.storage.read_file("one")
        ct2 = device.storage.read_file("two")
        assert ct1 != ct2
        assert b"same content here" not in ct1

    def test_wrong_key_leaves_bytes(self):
        device = make_device()
        device.inject_file("s", b"classified", sensitive=True)
        device.encrypt_files(["s"])
        sealed = device.storage.read_file("s")
        with pytest.raises(IntegrityError):
            device.decrypt_files(["s"], key=b"w" * 32)
        assert device.storage.read_file("s") == sealed

    def test_missing_file_and_double_encrypt(self):
        device = make_device()
        device.inject_file("s", b"classified", sensitive=True)
        with pytest.raises(ActionError, match="ghost"):
            device.encrypt_files(["ghost"])
        device.encrypt_files(["s"])
        with pytest.raises(ActionError, match="already encrypted"):
            device.encrypt_files(["s"])

    def test_sensitive_selector_skips_encrypted(self):
        device = make_device()
        device.inject_file("a", b"aaaa secret", sensitive=True)
        device.inject_file("b", b"bbbb secret", sensitive=True)
        device.encrypt_files(["a"])
        assert device.encrypt_files(SENSITIVE) == 1


class TestDeleteOverwriteRedelete:
    def test_delete_sensitive_remains_recoverable(self):
        device = make_device()
        seed_files(device)
        assert device.delete_files(SENSITIVE) == 2
        assert device.recover_scan(b"SECRET123")

    def test_delete_all_empties_table(self):
        device = make_device()
        seed_files(device)
        device.delete_files(ALL)
        assert device.storage.files == {}

    def test_unknown_name_reported(self):
        device = make_device()
        seed_files(device)
        with pytest.raises(ActionError, match="nope"):
            device.delete_files(["nope"])

    def test_overwrite_hits_exactly_freed_clusters(self):
        device = make_device()
        seed_files(device)
        # Oracle: enumerate the owned clusters from the table before deleting.
        expected_freed = clusters_of(device, ["notes.txt", "accounts.db"])
        live = clusters_of(device, ["podcast.mp3", "todo.txt", "photo.jpg"])
        before = device.storage.snapshot()

        device.delete_files(SENSITIVE)
        assert device.storage.freed == expected_freed
        count = device.overwrite_deleted(0x00)
        assert count == len(expected_freed)

        after = device.storage.snapshot()
        size = device.storage.cluster_size
        for c in expected_freed:
            assert after[c * size : (c + 1) * size] == b"\x00" * size
        for c in live:
            assert after[c * size : (c + 1) * size] == before[c * size : (c + 1) * size]

    def test_overwrite_with_nothing_deleted(self):
        device = make_device()
        seed_files(device)
        assert device.overwrite_deleted(0x00) == 0

    def test_redelete_one_pass_equals_overwrite(self):
        a, b = make_device(seed="same"), make_device(seed="same")
        for d in (a, b):
            seed_files(d, random.Random(5))
            d.delete_files(ALL)
        a.overwrite_deleted(0x00)
        b.redelete(passes=1)
        assert a.storage.snapshot() == b.storage.snapshot()

    def test_redelete_rejects_zero_passes(self):
        device = make_device()
        with pytest.raises(ActionError, match="at least one pass"):
            device.redelete(passes=0)

    def test_full_wipe_sequence_defeats_recovery(self):
        device = make_device()
        seed_files(device)
        originals = {n: device.storage.read_file(n) for n in device.storage.files}
        device.delete_files(ALL)
        device.overwrite_deleted(0x00)
        passes, final_pattern = device.redelete(passes=3)
        assert (passes, final_pattern) == (3, 0x00)
        for content in originals.values():
            for i in range(len(content) - 3):
                assert device.recover_scan(content[i : i + 4]) == []

    def test_wipe_leaves_only_fill_patterns(self):
        device = make_device()
        seed_files(device)
        device.delete_files(ALL)
        device.overwrite_deleted(0x00)
        device.redelete(passes=3)
        assert set(device.storage.snapshot()) <= {0x00, 0xFF}


class TestRecoverScan:
    def test_finds_present_content(self):
        device = make_device()
        seed_files(device)
        assert device.recover_scan(b"SECRET123")

    def test_positions_map_to_clusters(self):
        device = make_device()
        device.inject_file("x", b"A" * 10 + b"NEEDLE")
        (cluster, offset), *_ = device.recover_scan(b"NEEDLE")
        assert cluster in device.storage.files["x"].clusters
        assert offset == 10

    def test_empty_needle_rejected(self):
        device = make_device()
        with pytest.raises(StorageError, match="empty needle"):
            device.recover_scan(b"")


class TestActionDispatch:
    def test_ring(self):
        device = make_device()
        result = device.execute_action(cmd(ActionKind.RING, {"ring_interval_seconds": 60}), 5)
        assert device.functions.ringer_active
        assert device.functions.ringer_interval_s == 60
        assert result.detail == {"interval_s": 60}

    def test_send_text_lands_in_inbox(self):
        device = make_device()
        device.execute_action(cmd(ActionKind.SEND_TEXT, {"message": "call me"}), 9)
        assert device.inbox == [(9, "call me")]

    def test_track_echoes_position(self):
        device = make_device()
        result = device.execute_action(cmd(ActionKind.TRACK), 0)
        assert result.detail["position"] == [35.79, -78.78]

    def test_password_only_access(self):
        device = make_device()
        device.execute_action(cmd(ActionKind.PASSWORD_ONLY_ACCESS), 0)
        assert device.functions.lock is LockState.PASSWORD_ONLY

    def test_disable_functions_blocks_calls(self):
        device = make_device()
        all_fns = ["call_placement", "data_viewing", "email", "browsing"]
        device.execute_action(cmd(ActionKind.DISABLE_FUNCTIONS, {"functions": all_fns}), 0)
        assert device.functions.flags() == {k: False for k in all_fns}
        assert device.place_call("+1-919-555-0000", 1) == {
            "placed": False,
            "reason": "call placement disabled",
        }

    def test_forced_outgoing_number(self):
        device = make_device()
        device.execute_action(cmd(ActionKind.FORCE_OUTGOING_CALLS, {"number": "+1-555-0100"}), 0)
        assert device.place_call("+1-919-555-1234", 1) == {"placed": True, "number": "+1-555-0100"}

    def test_forced_url(self):
        device = make_device()
        device.execute_action(cmd(ActionKind.FORCE_URL, {"url": "https://r.example"}), 0)
        assert device.visit_url("https://news.example", 1) == {
            "visited": True,
            "url": "https://r.example",
        }

    def test_usage_recording(self):
        device = make_device()
        device.place_call("+1-919-555-0001", 1)
        assert device.drain_usage() == []
        device.execute_action(cmd(ActionKind.RECORD_AND_REPORT_USE), 2)
        device.place_call("+1-919-555-0002", 3)
        device.visit_url("https://a.example", 4)
        entries = device.drain_usage()
        assert [(e.t, e.kind) for e in entries] == [(3, "CallPlaced"), (4, "UrlVisited")]
        assert device.drain_usage() == []

    def test_wipe_chain_via_dispatch(self):
        device = make_device()
        seed_files(device)
        device.execute_action(cmd(ActionKind.DELETE_ALL), 0)
        device.execute_action(cmd(ActionKind.OVERWRITE_DELETED, {"pattern": 0}), 1)
        result = device.execute_action(cmd(ActionKind.REDELETE, {"passes": 3}), 2)
        assert result.detail == {"passes": 3, "final_pattern": 0}
        assert device.recover_scan(b"SECRET123") == []


class TestLiveDataSafety:
    MUTATING = {
        ActionKind.DELETE_ALL,
        ActionKind.DELETE_SENSITIVE,
        ActionKind.ENCRYPT_SENSITIVE,
        ActionKind.PARTITION_SENSITIVE,
    }

    PARAMS = {
        ActionKind.RING: {"ring_interval_seconds": 30},
        ActionKind.SEND_TEXT: {"message": "hi"},
        ActionKind.PLAY_RECORDED_CALL: {"message": "hello"},
        ActionKind.FORCE_OUTGOING_CALLS: {"number": "+1-555-0100"},
        ActionKind.FORCE_URL: {"url": "https://x.example"},
        ActionKind.DISABLE_FUNCTIONS: {"functions": ["email"]},
        ActionKind.OVERWRITE_DELETED: {"pattern": 255},
        ActionKind.REDELETE: {"passes": 2},
    }

    def test_only_listed_actions_touch_live_bytes(self):
        for kind in ActionKind:
            device = make_device()
            seed_files(device)
            device.delete_files(["photo.jpg"])  # gives overwrite passes something to chew on
            live = {n: device.storage.read_file(n) for n in device.storage.files}
            device.execute_action(cmd(kind, self.PARAMS.get(kind)), 0)
            if kind in self.MUTATING:
                continue
            for name, content in live.items():
                assert device.storage.read_file(name) == content, f"{kind} altered {name}"
