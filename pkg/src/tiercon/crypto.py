"""Authenticated encryption and credential hashing.

File encryption uses AES-256-GCM with a 12-byte per-file nonce prepended to
the ciphertext. The 16-byte tag makes tampering and wrong-key decryption
detectable. Keys are provisioned per device as hex in the agent config; key
rotation and escrow are out of scope at this scale.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

NONCE_SIZE = 12
TAG_SIZE = 16
SEAL_OVERHEAD = NONCE_SIZE + TAG_SIZE


class IntegrityError(Exception):
    """Decryption failed authentication (wrong key or tampered data)."""


class CredentialError(Exception):
    """A presented credential did not match the stored owner secret."""


def key_from_hex(text: str) -> bytes:
    key = bytes.fromhex(text)
    if len(key) not in (16, 24, 32):
        raise ValueError(f"encryption key must be 16, 24, or 32 bytes, got {len(key)}")
    return key


def seal(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    if len(nonce) != NONCE_SIZE:
        raise ValueError(f"nonce must be {NONCE_SIZE} bytes")
    return nonce + AESGCM(key).encrypt(nonce, plaintext, aad)


def open_sealed(key: bytes, blob: bytes, aad: bytes = b"") -> bytes:
    if len(blob) < SEAL_OVERHEAD:
        raise IntegrityError("sealed blob too short")
    nonce, ciphertext = blob[:NONCE_SIZE], blob[NONCE_SIZE:]
    try:
        return AESGCM(key).decrypt(nonce, ciphertext, aad)
    except InvalidTag:
        raise IntegrityError("authentication failed: wrong key or corrupted data") from None


def hash_credential(credential: str) -> str:
    return hashlib.sha256(credential.encode("utf-8")).hexdigest()


def verify_credential(credential: str, stored_hash: str) -> bool:
    return hash_credential(credential) == stored_hash
