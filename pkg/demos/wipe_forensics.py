#!/usr/bin/env python3
"""Why deletion is not erasure, shown on the cluster simulator.

Seeds a device, deletes everything, and lets the forensic scan prove the
bytes are still there; then overwrites and re-deletes, and proves they are
not. The scan reads raw clusters and ignores the file table, so it finds
whatever a thief with a disk editor would find.
"""

from tiercon.device import ALL, SimDevice

device = SimDevice("exhibit-a")
device.inject_file("passwords.txt", b"vault code is SECRET123, do not share", sensitive=True)
device.inject_file("diary.txt", b"nothing interesting happened today", sensitive=False)

def look(label):
    hits = device.recover_scan(b"SECRET123")
    files = len(device.storage.files)
    freed = len(device.storage.freed)
    print(f"{label:<28} files={files} freed_clusters={freed} 'SECRET123' hits={len(hits)}")

look("fresh device")

device.delete_files(ALL)
look("after delete (table empty)")

clusters = device.overwrite_deleted(0x00)
look(f"after overwrite ({clusters} clusters)")

passes, final = device.redelete(passes=3)
look(f"after re-delete x{passes}")

fill_values = set(device.storage.snapshot())
print(f"\nstorage now contains only fill bytes: {sorted(hex(b) for b in fill_values)}")
