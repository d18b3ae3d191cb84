"""Synthetic coordinate-to-address lookup.

Addresses are a deterministic function of a 0.01-degree grid cell, so any
recipient without a map client still gets a stable, human-readable location
string. No external service involved.
"""

from __future__ import annotations

from .domain import GeoPoint

_CELL_DEG = 0.01


def address_for(point: GeoPoint) -> str:
    ward = int((point.lat + 90.0) / _CELL_DEG)
    block = int((point.lon + 180.0) / _CELL_DEG)
    return f"Ward W-{ward}, Block {block}"
