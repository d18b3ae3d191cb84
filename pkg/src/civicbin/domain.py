"""Core entity types, identifiers, clocks, and shared state machines.

All instants are integer milliseconds since the epoch so that simulated and
live operation share one time representation. Entities here are plain value
types; services keep their own mutable copies.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


MS_PER_S = 1000
MS_PER_HOUR = 3_600_000


class CivicbinError(Exception):
    """Base error; ``code`` is the stable machine-readable error name."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class NidFormatError(CivicbinError):
    code = "format_error"


class InvalidTransition(CivicbinError):
    code = "invalid_transition"

    def __init__(self, state: "ComplaintState", event: str):
        self.state = state
        self.event = event
        super().__init__(f"no transition from {state.value} on '{event}'")


class InvalidConfig(CivicbinError):
    code = "invalid_config"

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class UnknownEntity(CivicbinError):
    """Raised with a specific subclass code per entity kind."""


class UnknownCitizen(UnknownEntity):
    code = "unknown_citizen"


class UnknownCrew(UnknownEntity):
    code = "unknown_crew"


class UnknownStation(UnknownEntity):
    code = "unknown_station"


class UnknownZone(UnknownEntity):
    code = "unknown_zone"


class UnknownTarget(UnknownEntity):
    code = "unknown_target"


class UnknownSelector(UnknownEntity):
    code = "unknown_selector"


class DuplicateNid(CivicbinError):
    code = "duplicate_nid"


class MissingPhoto(CivicbinError):
    code = "missing_photo"


class MalformedBatch(CivicbinError):
    code = "malformed_batch"


class WrongCrew(CivicbinError):
    code = "wrong_crew"


class CrewBusy(CivicbinError):
    code = "crew_busy"


# --------------------------------------------------------------------------
# Clocks


class Clock:
    def now_ms(self) -> int:
        raise NotImplementedError


class WallClock(Clock):
    def now_ms(self) -> int:
        return time.time_ns() // 1_000_000


class VirtualClock(Clock):
    """Manually advanced clock; never moves backwards."""

    def __init__(self, start_ms: int = 0):
        self._now_ms = int(start_ms)

    def now_ms(self) -> int:
        return self._now_ms

    def advance_to(self, t_ms: int) -> None:
        if t_ms > self._now_ms:
            self._now_ms = int(t_ms)


# --------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InvalidConfig("lat", f"latitude out of range: {self.lat!r}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise InvalidConfig("lon", f"longitude out of range: {self.lon!r}")

    def as_dict(self) -> dict:
        return {"lat": self.lat, "lon": self.lon}


@dataclass(frozen=True)
class BinGeometry:
    """Usable waste column depth and the sensor's standoff above the max-fill line."""

    depth_cm: float
    sensor_offset_cm: float

    def __post_init__(self):
        if not (math.isfinite(self.depth_cm) and self.depth_cm > 0):
            raise InvalidConfig("depth_cm", f"must be positive, got {self.depth_cm!r}")
        if not (math.isfinite(self.sensor_offset_cm) and self.sensor_offset_cm >= 0):
            raise InvalidConfig("sensor_offset_cm", f"must be >= 0, got {self.sensor_offset_cm!r}")


class LedColor(str, Enum):
    GREEN = "Green"
    YELLOW = "Yellow"
    RED = "Red"


class StationStatus(str, Enum):
    EMPTY = "Empty"
    FULL = "Full"
    OVERFLOW = "Overflow"
    INDETERMINATE = "Indeterminate"


class HeatFlag(str, Enum):
    NORMAL = "Normal"
    ORGANIC_SUSPECTED = "OrganicSuspected"
    ANOMALY = "Anomaly"


class Uplink(str, Enum):
    WIFI = "WiFi"
    GSM = "Gsm"


class AlertKind(str, Enum):
    FULL = "Full"
    OVERFLOW = "Overflow"
    HEAT_ANOMALY = "HeatAnomaly"
    SLA_BREACH = "SlaBreach"


class Channel(str, Enum):
    PUSH = "Push"
    SMS = "Sms"


@dataclass
class SmartBin:
    """Central's live view of one roadside sensed container."""

    bin_id: str
    zone_id: str
    location: GeoPoint
    geometry: BinGeometry
    fill_fraction: float = 0.0
    inner_temp_c: float = 25.0
    led: LedColor = LedColor.GREEN
    battery_pct: float = 100.0
    last_report_seq: int = -1
    online: bool = True


@dataclass
class WasteStation:
    station_id: str
    location: GeoPoint
    solar_light_on: bool = False
    status: StationStatus = StationStatus.EMPTY
    last_observation_at: Optional[int] = None


@dataclass
class Zone:
    zone_id: str
    wifi_available: bool
    wifi_outage: bool
    bin_ids: set = field(default_factory=set)
    poll_interval_s: int = 600

    def __post_init__(self):
        if self.poll_interval_s <= 0:
            raise InvalidConfig("poll_interval_s", "must be positive")


@dataclass
class Citizen:
    citizen_id: str
    nid: str
    name: str
    phone: str
    registered_at: int


class ComplaintState(str, Enum):
    SUBMITTED = "Submitted"
    DISPATCHED = "Dispatched"
    RESOLVED = "Resolved"
    ACKNOWLEDGED = "Acknowledged"


@dataclass
class Complaint:
    complaint_id: str
    citizen_id: str
    photo_ref: str
    location: GeoPoint
    address_text: str
    description: str
    state: ComplaintState = ComplaintState.SUBMITTED
    submitted_at: Optional[int] = None
    dispatched_at: Optional[int] = None
    resolved_at: Optional[int] = None
    assigned_crew: Optional[str] = None


@dataclass
class Alert:
    alert_id: str
    source_kind: str  # "bin" | "station" | "complaint"
    source_id: str
    kind: AlertKind
    raised_at: int
    cleared_at: Optional[int] = None


@dataclass
class Notification:
    notification_id: str
    channel: Channel
    recipient: str
    body: str
    geo: Optional[GeoPoint]
    address_text: Optional[str]
    queued_at: int
    delivered_at: Optional[int] = None

    def __post_init__(self):
        # SMS recipients may have no smartphone map, so the textual address
        # must always ride along.
        if self.channel is Channel.SMS and not self.address_text:
            raise InvalidConfig("address_text", "Sms notifications must carry address_text")


@dataclass(frozen=True)
class Thresholds:
    """Alerting and polling configuration shared across the platform."""

    yellow_at: float = 0.5
    red_at: float = 0.9
    overflow_at: float = 1.0
    heat_organic_delta_c: float = 5.0
    heat_anomaly_delta_c: float = 30.0
    poll_interval_s: int = 600
    sla_hours: float = 3.0

    def __post_init__(self):
        if not (0.0 < self.yellow_at < self.red_at <= self.overflow_at):
            raise InvalidConfig(
                "thresholds",
                f"need 0 < yellow_at < red_at <= overflow_at, got "
                f"{self.yellow_at}/{self.red_at}/{self.overflow_at}",
            )
        if self.poll_interval_s <= 0:
            raise InvalidConfig("poll_interval_s", "must be positive")
        if self.sla_hours <= 0:
            raise InvalidConfig("sla_hours", "must be positive")

    @property
    def sla_ms(self) -> int:
        return int(self.sla_hours * MS_PER_HOUR)

    def as_dict(self) -> dict:
        return {
            "yellow_at": self.yellow_at,
            "red_at": self.red_at,
            "overflow_at": self.overflow_at,
            "heat_organic_delta_c": self.heat_organic_delta_c,
            "heat_anomaly_delta_c": self.heat_anomaly_delta_c,
            "poll_interval_s": self.poll_interval_s,
            "sla_hours": self.sla_hours,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Thresholds":
        allowed = {f: raw[f] for f in raw if f in cls.__dataclass_fields__}
        unknown = set(raw) - set(allowed)
        if unknown:
            raise InvalidConfig("thresholds", f"unknown fields: {sorted(unknown)}")
        return cls(**allowed)


# --------------------------------------------------------------------------
# Operations

_NID_LENGTHS = (10, 13, 17)


def validate_nid(nid: str) -> None:
    """Check the national-ID registration key: all digits, length 10, 13, or 17.

    Raises ``NidFormatError`` naming the violated rule.
    """
    if not isinstance(nid, str):
        raise NidFormatError(f"nid must be a string, got {type(nid).__name__}")
    if not nid.isascii() or not nid.isdigit():
        raise NidFormatError("non-digit characters in nid")
    if len(nid) not in _NID_LENGTHS:
        raise NidFormatError(f"bad length {len(nid)} (expected one of {_NID_LENGTHS})")


def nid_is_valid(nid: str) -> bool:
    try:
        validate_nid(nid)
    except NidFormatError:
        return False
    return True


COMPLAINT_EVENTS = ("dispatch", "resolve", "acknowledge")

_TRANSITIONS = {
    (ComplaintState.SUBMITTED, "dispatch"): ComplaintState.DISPATCHED,
    (ComplaintState.DISPATCHED, "resolve"): ComplaintState.RESOLVED,
    (ComplaintState.RESOLVED, "acknowledge"): ComplaintState.ACKNOWLEDGED,
}


def complaint_transition(state: ComplaintState, event: str) -> ComplaintState:
    """Advance the complaint lifecycle chain; raises ``InvalidTransition`` otherwise."""
    try:
        return _TRANSITIONS[(state, event)]
    except KeyError:
        raise InvalidTransition(state, event) from None
