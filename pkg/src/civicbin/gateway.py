"""Fog-layer gateway: periodic zone polls, report batching, Wi-Fi/GSM uplink
selection, and store-and-forward retry toward the central service.

A gateway is a sequential agent owning one zone. Batches that exhaust their
retries are buffered and re-sent ahead of newer batches on later cycles, so
delivery is at-least-once and FIFO per gateway; central deduplicates on
(bin_id, seq).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .canon import canonical_json
from .domain import MalformedBatch, Uplink, Zone
from .rng import DeterministicRng

WIRE_VERSION = 1

READING_FIELDS = ("bin_id", "seq", "distance_cm", "inner_temp_c", "battery_pct")


@dataclass(frozen=True)
class BinReading:
    bin_id: str
    seq: int
    distance_cm: float
    inner_temp_c: float
    battery_pct: float

    def as_dict(self) -> dict:
        return {
            "bin_id": self.bin_id,
            "seq": self.seq,
            "distance_cm": self.distance_cm,
            "inner_temp_c": self.inner_temp_c,
            "battery_pct": self.battery_pct,
        }


@dataclass(frozen=True)
class BatchReport:
    gateway_id: str
    zone_id: str
    uplink: Uplink
    sent_at: int
    readings: tuple
    missing: tuple

    def to_wire(self) -> str:
        return canonical_json(
            {
                "v": WIRE_VERSION,
                "gateway_id": self.gateway_id,
                "zone_id": self.zone_id,
                "uplink": self.uplink.value,
                "sent_at": self.sent_at,
                "readings": [r.as_dict() for r in self.readings],
                "missing": list(self.missing),
            }
        )

    @classmethod
    def from_wire(cls, text: str) -> "BatchReport":
        try:
            raw = json.loads(text)
        except (json.JSONDecodeError, TypeError) as exc:
            raise MalformedBatch(f"not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: object) -> "BatchReport":
        if not isinstance(raw, dict):
            raise MalformedBatch("batch body must be an object")
        if raw.get("v") != WIRE_VERSION:
            raise MalformedBatch(f"unsupported wire version {raw.get('v')!r}")
        missing_keys = {"gateway_id", "zone_id", "uplink", "sent_at", "readings", "missing"} - set(raw)
        if missing_keys:
            raise MalformedBatch(f"missing fields: {sorted(missing_keys)}")
        try:
            uplink = Uplink(raw["uplink"])
        except ValueError:
            raise MalformedBatch(f"unknown uplink {raw['uplink']!r}") from None
        if not isinstance(raw["readings"], list) or not isinstance(raw["missing"], list):
            raise MalformedBatch("readings and missing must be lists")
        readings = []
        for entry in raw["readings"]:
            if not isinstance(entry, dict) or set(READING_FIELDS) - set(entry):
                raise MalformedBatch(f"reading missing fields: {entry!r}")
            try:
                readings.append(
                    BinReading(
                        bin_id=str(entry["bin_id"]),
                        seq=int(entry["seq"]),
                        distance_cm=float(entry["distance_cm"]),
                        inner_temp_c=float(entry["inner_temp_c"]),
                        battery_pct=float(entry["battery_pct"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise MalformedBatch(f"bad reading value: {exc}") from None
        seen = [r.bin_id for r in readings] + list(raw["missing"])
        if len(seen) != len(set(seen)):
            raise MalformedBatch("bin_id appears more than once in batch")
        return cls(
            gateway_id=str(raw["gateway_id"]),
            zone_id=str(raw["zone_id"]),
            uplink=uplink,
            sent_at=int(raw["sent_at"]),
            readings=tuple(readings),
            missing=tuple(str(b) for b in raw["missing"]),
        )


class TransmitStatus(str, Enum):
    ACK = "ack"
    FAILED = "failed"
    BUFFERED = "buffered"


@dataclass(frozen=True)
class TransmitResult:
    status: TransmitStatus
    attempts: int
    elapsed_ms: int  # channel time consumed; for ACK the last attempt's latency is included


@dataclass(frozen=True)
class ChannelModel:
    """Simulated uplink characteristics; plausible defaults, fully configurable."""

    wifi_latency_ms: int = 50
    wifi_loss: float = 0.01
    gsm_latency_ms: int = 800
    gsm_loss: float = 0.05
    max_retries: int = 3
    retry_backoff_ms: int = 500

    def params(self, uplink: Uplink) -> tuple:
        if uplink is Uplink.WIFI:
            return self.wifi_latency_ms, self.wifi_loss
        return self.gsm_latency_ms, self.gsm_loss

    def worst_case_cycle_ms(self, uplink: Uplink) -> int:
        latency, _ = self.params(uplink)
        return self.max_retries * (latency + self.retry_backoff_ms)

    def as_dict(self) -> dict:
        return {
            "wifi_latency_ms": self.wifi_latency_ms,
            "wifi_loss": self.wifi_loss,
            "gsm_latency_ms": self.gsm_latency_ms,
            "gsm_loss": self.gsm_loss,
            "max_retries": self.max_retries,
            "retry_backoff_ms": self.retry_backoff_ms,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ChannelModel":
        allowed = {f: raw[f] for f in raw if f in cls.__dataclass_fields__}
        unknown = set(raw) - set(allowed)
        if unknown:
            raise MalformedBatch(f"unknown channel fields: {sorted(unknown)}")
        return cls(**allowed)


def select_uplink(zone: Zone) -> Uplink:
    """Wi-Fi when the zone has working Wi-Fi; GSM fallback otherwise."""
    if zone.wifi_available and not zone.wifi_outage:
        return Uplink.WIFI
    return Uplink.GSM


def transmit(
    batch: BatchReport,
    uplink: Uplink,
    channel: ChannelModel,
    rng: DeterministicRng,
    buffer_on_failure: bool = True,
) -> TransmitResult:
    """Push one batch through the simulated channel.

    Each attempt is lost with the channel's loss probability; a lost attempt
    costs a full latency timeout plus the fixed backoff. After ``max_retries``
    attempts the batch is Buffered for the next cycle (or Failed when the
    caller does not store-and-forward).
    """
    latency_ms, loss = channel.params(uplink)
    elapsed = 0
    attempts = 0
    while attempts < channel.max_retries:
        attempts += 1
        lost = rng.uniform() < loss
        if not lost:
            return TransmitResult(TransmitStatus.ACK, attempts, elapsed + latency_ms)
        elapsed += latency_ms + channel.retry_backoff_ms
    status = TransmitStatus.BUFFERED if buffer_on_failure else TransmitStatus.FAILED
    return TransmitResult(status, attempts, elapsed)


@dataclass
class Gateway:
    """Per-zone aggregation agent with a FIFO store-and-forward buffer."""

    gateway_id: str
    last_poll_ms: Optional[int] = None
    buffer: deque = field(default_factory=deque)
    batches_built: int = 0

    def poll_zone(
        self,
        zone: Zone,
        read_bin: Callable[[str, int], Optional[BinReading]],
        now: int,
        uplink: Optional[Uplink] = None,
    ) -> Optional[BatchReport]:
        """Build this cycle's batch, or return None when the poll is not due.

        ``read_bin(bin_id, now)`` returns a fresh reading, or None for a bin
        that is unreachable this cycle (goes under ``missing``).
        """
        interval_ms = zone.poll_interval_s * 1000
        if self.last_poll_ms is not None and now - self.last_poll_ms < interval_ms:
            return None
        self.last_poll_ms = now
        readings = []
        missing = []
        for bin_id in sorted(zone.bin_ids):
            r = read_bin(bin_id, now)
            if r is None:
                missing.append(bin_id)
            else:
                readings.append(r)
        self.batches_built += 1
        return BatchReport(
            gateway_id=self.gateway_id,
            zone_id=zone.zone_id,
            uplink=uplink if uplink is not None else Uplink.WIFI,
            sent_at=now,
            readings=tuple(readings),
            missing=tuple(missing),
        )

    def send_cycle(
        self,
        new_batch: Optional[BatchReport],
        uplink: Uplink,
        channel: ChannelModel,
        rng: DeterministicRng,
        now: int,
    ) -> list:
        """Transmit buffered batches oldest-first, then the new batch.

        Stops at the first batch that exhausts its retries and re-buffers it
        together with everything behind it, preserving FIFO order. Returns
        ``[(batch, TransmitResult, delivered_at_ms), ...]`` for every batch
        attempted this cycle (delivered_at_ms is None unless ACKed).
        """
        queue = list(self.buffer)
        self.buffer.clear()
        if new_batch is not None:
            queue.append(new_batch)
        outcomes = []
        cursor = now
        for i, batch in enumerate(queue):
            result = transmit(batch, uplink, channel, rng)
            if result.status is TransmitStatus.ACK:
                delivered_at = cursor + result.elapsed_ms
                cursor = delivered_at
                outcomes.append((batch, result, delivered_at))
            else:
                self.buffer.extend(queue[i:])
                outcomes.append((batch, result, None))
                break
        return outcomes
