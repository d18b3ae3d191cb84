"""Standalone event-log reader: recomputes run metrics from the raw lines.

This is deliberately independent of the simulator's and the central
service's in-memory counters; the CLI ``report`` command and several
verification properties (hysteresis, exactly-once delivery, conservation)
use it as the second, log-derived route to the same numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Dict, Iterable, List, Set, Tuple

from .domain import BinGeometry, Thresholds
from .sensing import UltrasonicReading, fill_fraction


@dataclass(frozen=True)
class Metrics:
    overflow_bin_minutes: float = 0.0
    alerts_raised: int = 0
    notifications_sent: int = 0
    collections: int = 0
    complaints_submitted: int = 0
    complaints_resolved: int = 0
    sla_breaches: int = 0
    mean_alert_latency_s: float = 0.0
    liters_in: float = 0.0
    liters_collected: float = 0.0
    liters_in_bins: float = 0.0
    overflow_liters: float = 0.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @staticmethod
    def field_names() -> List[str]:
        return [f.name for f in fields(Metrics)]


@dataclass
class LogAnalysis:
    """Metrics plus the per-bin evidence used by verification tests."""

    metrics: Metrics
    header: dict = field(default_factory=dict)
    end_ms: int = 0
    red_crossings: Dict[str, List[int]] = field(default_factory=dict)
    full_alerts: Dict[str, List[int]] = field(default_factory=dict)
    expected_full_alerts: Dict[str, int] = field(default_factory=dict)
    readings_generated: List[Tuple[str, int]] = field(default_factory=list)
    readings_accepted: List[Tuple[str, int]] = field(default_factory=list)


def analyze(lines: Iterable[str]) -> LogAnalysis:
    thresholds = Thresholds()
    geometries: Dict[str, BinGeometry] = {}
    header: dict = {}

    liters_in = 0.0
    liters_collected = 0.0
    overflow_liters = 0.0
    content: Dict[Tuple[str, str], float] = {}

    alerts_raised = 0
    sla_breaches = 0
    notifications_sent = 0
    collections = 0
    complaints_submitted = 0
    complaints_resolved = 0

    prev_fill: Dict[str, float] = {}
    red_crossings: Dict[str, List[int]] = {}
    full_alerts: Dict[str, List[int]] = {}

    sampled_armed: Dict[str, bool] = {}
    expected_full_alerts: Dict[str, int] = {}
    readings_generated: List[Tuple[str, int]] = []
    readings_accepted: List[Tuple[str, int]] = []

    # (bin_id -> since-ms) for open at-capacity intervals
    full_since: Dict[str, int] = {}
    overflow_ms = 0.0
    end_ms = 0
    last_at = 0

    def set_bin_fill(bin_id: str, fill: float, at: int) -> None:
        nonlocal overflow_ms
        prev = prev_fill.get(bin_id)
        if (prev is None or prev < thresholds.red_at) and fill >= thresholds.red_at:
            red_crossings.setdefault(bin_id, []).append(at)
        prev_fill[bin_id] = fill
        if fill >= thresholds.overflow_at:
            full_since.setdefault(bin_id, at)
        elif bin_id in full_since:
            overflow_ms += at - full_since.pop(bin_id)

    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        entry = json.loads(raw)
        at, kind, p = entry["at"], entry["kind"], entry["payload"]
        last_at = max(last_at, at)

        if kind == "log.header":
            header = p
        elif kind == "central.thresholds_set":
            thresholds = Thresholds.from_dict(p["thresholds"])
        elif kind == "central.bin_registered":
            geometries[p["bin_id"]] = BinGeometry(p["depth_cm"], p["sensor_offset_cm"])
            sampled_armed[p["bin_id"]] = True
            expected_full_alerts[p["bin_id"]] = 0
            full_alerts[p["bin_id"]] = []
            red_crossings[p["bin_id"]] = []
        elif kind == "sim.bin_fill":
            liters_in += p["liters_added"]
            overflow_liters += p["overflow_liters"]
            content[("bin", p["bin_id"])] = p["content_liters"]
            set_bin_fill(p["bin_id"], p["fill"], at)
        elif kind == "sim.station_fill":
            liters_in += p["liters_added"]
            overflow_liters += p["overflow_liters"]
            content[("station", p["station_id"])] = p["content_liters"]
        elif kind == "sim.collection":
            liters_collected += p["liters_removed"]
            content[(p["target_kind"], p["target_id"])] = 0.0
            collections += 1
            if p["target_kind"] == "bin":
                set_bin_fill(p["target_id"], 0.0, at)
        elif kind == "gateway.poll":
            for r in p["readings"]:
                bin_id = r["bin_id"]
                readings_generated.append((bin_id, r["seq"]))
                fill = fill_fraction(
                    UltrasonicReading(r["distance_cm"], measured_at=at, seq=r["seq"]),
                    geometries[bin_id],
                )
                if fill <= thresholds.yellow_at:
                    sampled_armed[bin_id] = True
                if fill >= thresholds.red_at and sampled_armed[bin_id]:
                    expected_full_alerts[bin_id] += 1
                    sampled_armed[bin_id] = False
        elif kind == "central.reading_accepted":
            readings_accepted.append((p["bin_id"], p["seq"]))
        elif kind == "central.alert_raised":
            alerts_raised += 1
            if p["kind"] == "SlaBreach":
                sla_breaches += 1
            if p["kind"] == "Full" and p["source_kind"] == "bin":
                full_alerts.setdefault(p["source_id"], []).append(at)
        elif kind == "central.notification_delivered":
            notifications_sent += 1
        elif kind == "central.complaint_submitted":
            complaints_submitted += 1
        elif kind == "central.complaint_resolved":
            complaints_resolved += 1
        elif kind == "sim.end":
            end_ms = p["duration_ms"]

    if end_ms == 0:
        end_ms = last_at
    for bin_id, since in list(full_since.items()):
        overflow_ms += max(0, end_ms - since)

    latencies = []
    for bin_id, raise_times in full_alerts.items():
        crossings = red_crossings.get(bin_id, [])
        for raised_at in raise_times:
            before = [t for t in crossings if t <= raised_at]
            if before:
                latencies.append((raised_at - before[-1]) / 1000.0)
    mean_latency = sum(latencies) / len(latencies) if latencies else 0.0

    metrics = Metrics(
        overflow_bin_minutes=overflow_ms / 60_000.0,
        alerts_raised=alerts_raised,
        notifications_sent=notifications_sent,
        collections=collections,
        complaints_submitted=complaints_submitted,
        complaints_resolved=complaints_resolved,
        sla_breaches=sla_breaches,
        mean_alert_latency_s=mean_latency,
        liters_in=liters_in,
        liters_collected=liters_collected,
        liters_in_bins=sum(content.values()),
        overflow_liters=overflow_liters,
    )
    return LogAnalysis(
        metrics=metrics,
        header=header,
        end_ms=end_ms,
        red_crossings=red_crossings,
        full_alerts=full_alerts,
        expected_full_alerts=expected_full_alerts,
        readings_generated=readings_generated,
        readings_accepted=readings_accepted,
    )


def compute_metrics(lines: Iterable[str]) -> Metrics:
    return analyze(lines).metrics
