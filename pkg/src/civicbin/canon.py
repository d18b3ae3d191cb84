"""Canonical serialization helpers shared by the event log and wire formats.

Every record that ends up in an event log or on the wire goes through
``canonical_json`` so that identical state always serializes to identical
bytes: keys sorted, no whitespace, UTF-8 passthrough, NaN/Inf rejected.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize ``obj`` to the canonical single-line JSON form."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def config_hash(obj: Any) -> str:
    """Short stable fingerprint of a JSON-serializable config."""
    digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
    return digest[:16]


def stable_phase(key: str, modulus: int) -> int:
    """Deterministic phase offset in ``[0, modulus)`` derived from a string id.

    Used to stagger periodic schedules (zone polls, station captures) without
    relying on Python's salted ``hash()``.
    """
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    return zlib.crc32(key.encode("utf-8")) % modulus
