"""The city-corporation service: batch ingestion, event-sourced state,
alerting with hysteresis, the citizen complaint workflow, SLA sweeping, and
the notification outbox with mock transports.

Every state mutation is an appended ``StateEvent``; command methods decide,
emit events, and the appliers below are the only code that touches state.
Replaying the event list from empty therefore reproduces the live service
exactly, which the tests assert via ``snapshot()``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional

from . import sensing
from .canon import canonical_json
from .domain import (
    Alert,
    AlertKind,
    BinGeometry,
    Channel,
    Citizen,
    Complaint,
    ComplaintState,
    CrewBusy,
    DuplicateNid,
    GeoPoint,
    HeatFlag,
    InvalidTransition,
    MalformedBatch,
    MissingPhoto,
    Notification,
    SmartBin,
    StationStatus,
    Thresholds,
    UnknownCitizen,
    UnknownCrew,
    UnknownSelector,
    UnknownStation,
    UnknownTarget,
    UnknownZone,
    WasteStation,
    WrongCrew,
    Zone,
    complaint_transition,
    validate_nid,
)
from .gateway import BatchReport
from .gazetteer import address_for
from .sensing import StationObservation

RESOLUTION_BODY = "Your complaint has been solved. Thanks for your activity"

PUSH_LATENCY_MS = 100
SMS_LATENCY_MS = 2000

_STATION_SEVERITY = {StationStatus.FULL: 1, StationStatus.OVERFLOW: 2}
_STATION_ALERT_KIND = {StationStatus.FULL: AlertKind.FULL, StationStatus.OVERFLOW: AlertKind.OVERFLOW}


@dataclass(frozen=True)
class StateEvent:
    seq: int
    at: int
    kind: str
    payload: dict

    def as_dict(self) -> dict:
        return {"seq": self.seq, "at": self.at, "kind": self.kind, "payload": self.payload}

    def to_line(self) -> str:
        return canonical_json(self.as_dict())


@dataclass
class IngestResult:
    accepted: int
    duplicates: int
    alerts_raised: List[str]

    def as_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "alerts_raised": list(self.alerts_raised),
        }


@dataclass
class CrewInfo:
    crew_id: str
    smartphone: bool = True


@dataclass
class OutboxEntry:
    notification: Notification
    transport: str
    status: str = "Queued"  # Queued | Delivered
    about_kind: str = ""
    about_id: str = ""

    @property
    def due_at(self) -> int:
        latency = PUSH_LATENCY_MS if self.notification.channel is Channel.PUSH else SMS_LATENCY_MS
        return self.notification.queued_at + latency


def _geo_payload(point: Optional[GeoPoint]) -> dict:
    if point is None:
        return {"lat": None, "lon": None}
    return {"lat": point.lat, "lon": point.lon}


class CentralService:
    """Single-writer service core; thread safety is the API layer's job."""

    def __init__(self, thresholds: Optional[Thresholds] = None, ambient_ref_c: float = 25.0):
        self.thresholds = thresholds or Thresholds()
        self.ambient_ref_c = ambient_ref_c
        self.zones: dict = {}
        self.bins: dict = {}
        self.stations: dict = {}
        self.crews: dict = {}
        self.citizens: dict = {}
        self.complaints: dict = {}
        self.alerts: dict = {}
        self.outbox: dict = {}
        self.events: List[StateEvent] = []
        self.listeners: List[Callable[[StateEvent], None]] = []
        # Derived bookkeeping, all rebuilt by appliers during replay.
        self._nid_index: dict = {}
        self._seen_seqs: dict = {}
        self._bin_armed: dict = {}
        self._bin_heat: dict = {}
        self._station_level: dict = {}
        self._open_alerts: dict = {}
        self._sla_alerted: set = set()
        self._counters = {"alert": 1, "notification": 1, "complaint": 1, "citizen": 1}

    # ------------------------------------------------------------------
    # Event plumbing

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    def _record(self, kind: str, payload: dict, at: int) -> StateEvent:
        event = StateEvent(seq=self.last_seq + 1, at=at, kind=kind, payload=payload)
        self.events.append(event)
        self._apply(event)
        for listener in self.listeners:
            listener(event)
        return event

    @classmethod
    def replay(cls, events: Iterable[StateEvent]) -> "CentralService":
        """Rebuild a service purely from its event stream."""
        svc = cls()
        for event in events:
            if event.seq != svc.last_seq + 1:
                raise ValueError(f"event seq gap: expected {svc.last_seq + 1}, got {event.seq}")
            svc.events.append(event)
            svc._apply(event)
        return svc

    def _next_id(self, kind: str, prefix: str) -> str:
        return f"{prefix}-{self._counters[kind]:06d}"

    @staticmethod
    def _bump(counters: dict, kind: str, ident: str) -> None:
        n = int(ident.rsplit("-", 1)[1])
        counters[kind] = max(counters[kind], n + 1)

    # ------------------------------------------------------------------
    # Appliers: the only code allowed to mutate state

    def _apply(self, e: StateEvent) -> None:
        handler = getattr(self, f"_apply_{e.kind}", None)
        if handler is None:
            raise ValueError(f"no applier for event kind {e.kind!r}")
        handler(e)

    def _apply_thresholds_set(self, e: StateEvent) -> None:
        self.thresholds = Thresholds.from_dict(e.payload["thresholds"])
        self.ambient_ref_c = e.payload["ambient_ref_c"]

    def _apply_zone_registered(self, e: StateEvent) -> None:
        p = e.payload
        self.zones[p["zone_id"]] = Zone(
            zone_id=p["zone_id"],
            wifi_available=p["wifi_available"],
            wifi_outage=p["wifi_outage"],
            bin_ids=set(p["bin_ids"]),
            poll_interval_s=p["poll_interval_s"],
        )

    def _apply_bin_registered(self, e: StateEvent) -> None:
        p = e.payload
        self.bins[p["bin_id"]] = SmartBin(
            bin_id=p["bin_id"],
            zone_id=p["zone_id"],
            location=GeoPoint(p["lat"], p["lon"]),
            geometry=BinGeometry(p["depth_cm"], p["sensor_offset_cm"]),
        )
        if p["zone_id"] in self.zones:
            self.zones[p["zone_id"]].bin_ids.add(p["bin_id"])
        self._seen_seqs[p["bin_id"]] = set()
        self._bin_armed[p["bin_id"]] = True
        self._bin_heat[p["bin_id"]] = HeatFlag.NORMAL

    def _apply_station_registered(self, e: StateEvent) -> None:
        p = e.payload
        self.stations[p["station_id"]] = WasteStation(
            station_id=p["station_id"], location=GeoPoint(p["lat"], p["lon"])
        )
        self._station_level[p["station_id"]] = 0

    def _apply_crew_registered(self, e: StateEvent) -> None:
        p = e.payload
        self.crews[p["crew_id"]] = CrewInfo(crew_id=p["crew_id"], smartphone=p["smartphone"])

    def _apply_citizen_registered(self, e: StateEvent) -> None:
        p = e.payload
        citizen = Citizen(
            citizen_id=p["citizen_id"],
            nid=p["nid"],
            name=p["name"],
            phone=p["phone"],
            registered_at=e.at,
        )
        self.citizens[citizen.citizen_id] = citizen
        self._nid_index[citizen.nid] = citizen.citizen_id
        self._bump(self._counters, "citizen", citizen.citizen_id)

    def _apply_reading_accepted(self, e: StateEvent) -> None:
        p = e.payload
        b = self.bins[p["bin_id"]]
        b.fill_fraction = p["fill"]
        b.led = sensing.led_state(p["fill"], self.thresholds)
        b.inner_temp_c = p["inner_temp_c"]
        b.battery_pct = p["battery_pct"]
        b.last_report_seq = max(b.last_report_seq, p["seq"])
        b.online = True
        self._seen_seqs[p["bin_id"]].add(p["seq"])
        if p["fill"] <= self.thresholds.yellow_at:
            self._bin_armed[p["bin_id"]] = True
        self._bin_heat[p["bin_id"]] = HeatFlag(p["heat"])

    def _apply_reading_faulted(self, e: StateEvent) -> None:
        p = e.payload
        b = self.bins[p["bin_id"]]
        b.last_report_seq = max(b.last_report_seq, p["seq"])
        b.online = True
        self._seen_seqs[p["bin_id"]].add(p["seq"])

    def _apply_bin_offline(self, e: StateEvent) -> None:
        self.bins[e.payload["bin_id"]].online = False

    def _apply_batch_ingested(self, e: StateEvent) -> None:
        pass  # summary record only

    def _apply_station_observed(self, e: StateEvent) -> None:
        p = e.payload
        station = self.stations[p["station_id"]]
        status = StationStatus(p["status"])
        station.last_observation_at = e.at
        station.solar_light_on = p["light_on"]
        if status is not StationStatus.INDETERMINATE:
            station.status = status
        if status is StationStatus.EMPTY:
            self._station_level[p["station_id"]] = 0

    def _apply_alert_raised(self, e: StateEvent) -> None:
        p = e.payload
        alert = Alert(
            alert_id=p["alert_id"],
            source_kind=p["source_kind"],
            source_id=p["source_id"],
            kind=AlertKind(p["kind"]),
            raised_at=e.at,
        )
        self.alerts[alert.alert_id] = alert
        self._open_alerts[(alert.source_kind, alert.source_id, alert.kind)] = alert.alert_id
        if alert.kind is AlertKind.FULL and alert.source_kind == "bin":
            self._bin_armed[alert.source_id] = False
        if alert.source_kind == "station":
            self._station_level[alert.source_id] = _STATION_SEVERITY[StationStatus(alert.kind.value)]
        if alert.kind is AlertKind.SLA_BREACH:
            self._sla_alerted.add(alert.source_id)
        self._bump(self._counters, "alert", alert.alert_id)

    def _apply_alert_cleared(self, e: StateEvent) -> None:
        alert = self.alerts[e.payload["alert_id"]]
        alert.cleared_at = e.at
        self._open_alerts.pop((alert.source_kind, alert.source_id, alert.kind), None)

    def _apply_notification_queued(self, e: StateEvent) -> None:
        p = e.payload
        geo = None if p["lat"] is None else GeoPoint(p["lat"], p["lon"])
        channel = Channel(p["channel"])
        notification = Notification(
            notification_id=p["notification_id"],
            channel=channel,
            recipient=p["recipient"],
            body=p["body"],
            geo=geo,
            address_text=p["address_text"],
            queued_at=e.at,
        )
        self.outbox[notification.notification_id] = OutboxEntry(
            notification=notification,
            transport="MockPush" if channel is Channel.PUSH else "MockSms",
            about_kind=p["about_kind"],
            about_id=p["about_id"],
        )
        self._bump(self._counters, "notification", notification.notification_id)

    def _apply_notification_delivered(self, e: StateEvent) -> None:
        entry = self.outbox[e.payload["notification_id"]]
        entry.status = "Delivered"
        entry.notification.delivered_at = e.at

    def _apply_complaint_submitted(self, e: StateEvent) -> None:
        p = e.payload
        complaint = Complaint(
            complaint_id=p["complaint_id"],
            citizen_id=p["citizen_id"],
            photo_ref=p["photo_ref"],
            location=GeoPoint(p["lat"], p["lon"]),
            address_text=p["address_text"],
            description=p["description"],
            state=ComplaintState.SUBMITTED,
            submitted_at=e.at,
        )
        self.complaints[complaint.complaint_id] = complaint
        self._bump(self._counters, "complaint", complaint.complaint_id)

    def _apply_complaint_dispatched(self, e: StateEvent) -> None:
        c = self.complaints[e.payload["complaint_id"]]
        c.state = ComplaintState.DISPATCHED
        c.dispatched_at = e.at
        c.assigned_crew = e.payload["crew_id"]

    def _apply_complaint_resolved(self, e: StateEvent) -> None:
        c = self.complaints[e.payload["complaint_id"]]
        c.state = ComplaintState.RESOLVED
        c.resolved_at = e.at

    def _apply_complaint_acknowledged(self, e: StateEvent) -> None:
        self.complaints[e.payload["complaint_id"]].state = ComplaintState.ACKNOWLEDGED

    # ------------------------------------------------------------------
    # Registry commands

    def set_thresholds(self, thresholds: Thresholds, now: int, ambient_ref_c: Optional[float] = None) -> None:
        self._record(
            "thresholds_set",
            {
                "thresholds": thresholds.as_dict(),
                "ambient_ref_c": self.ambient_ref_c if ambient_ref_c is None else ambient_ref_c,
            },
            at=now,
        )

    def register_zone(self, zone_id: str, wifi_available: bool, wifi_outage: bool,
                      poll_interval_s: int, now: int) -> None:
        self._record(
            "zone_registered",
            {
                "zone_id": zone_id,
                "wifi_available": wifi_available,
                "wifi_outage": wifi_outage,
                "poll_interval_s": poll_interval_s,
                "bin_ids": [],
            },
            at=now,
        )

    def register_bin(self, bin_id: str, zone_id: str, location: GeoPoint,
                     geometry: BinGeometry, now: int) -> None:
        if zone_id not in self.zones:
            raise UnknownZone(f"zone {zone_id!r} not registered")
        self._record(
            "bin_registered",
            {
                "bin_id": bin_id,
                "zone_id": zone_id,
                "lat": location.lat,
                "lon": location.lon,
                "depth_cm": geometry.depth_cm,
                "sensor_offset_cm": geometry.sensor_offset_cm,
            },
            at=now,
        )

    def register_station(self, station_id: str, location: GeoPoint, now: int) -> None:
        self._record(
            "station_registered",
            {"station_id": station_id, "lat": location.lat, "lon": location.lon},
            at=now,
        )

    def register_crew(self, crew_id: str, smartphone: bool, now: int) -> None:
        self._record("crew_registered", {"crew_id": crew_id, "smartphone": smartphone}, at=now)

    # ------------------------------------------------------------------
    # Telemetry ingestion

    def ingest_batch(self, batch, now: int) -> IngestResult:
        """Process one gateway batch: dedup, update bins, raise edge-triggered alerts."""
        if isinstance(batch, str):
            batch = BatchReport.from_wire(batch)
        elif isinstance(batch, dict):
            batch = BatchReport.from_dict(batch)
        if batch.zone_id not in self.zones:
            raise UnknownZone(f"zone {batch.zone_id!r} not registered")
        accepted = 0
        duplicates = 0
        alerts: List[str] = []
        for reading in batch.readings:
            if reading.bin_id not in self.bins:
                raise MalformedBatch(f"reading references unknown bin {reading.bin_id!r}")
            if reading.seq in self._seen_seqs[reading.bin_id]:
                duplicates += 1
                continue
            accepted += 1
            alerts.extend(self._accept_reading(reading, now))
        for bin_id in batch.missing:
            if bin_id in self.bins and self.bins[bin_id].online:
                self._record("bin_offline", {"bin_id": bin_id}, at=now)
        self._record(
            "batch_ingested",
            {
                "gateway_id": batch.gateway_id,
                "zone_id": batch.zone_id,
                "uplink": batch.uplink.value,
                "sent_at": batch.sent_at,
                "accepted": accepted,
                "duplicates": duplicates,
                "alerts": list(alerts),
            },
            at=now,
        )
        return IngestResult(accepted=accepted, duplicates=duplicates, alerts_raised=alerts)

    def _accept_reading(self, reading, now: int) -> List[str]:
        b = self.bins[reading.bin_id]
        try:
            fill = sensing.fill_fraction(
                sensing.UltrasonicReading(reading.distance_cm, measured_at=now, seq=reading.seq),
                b.geometry,
            )
        except sensing.OutOfRange:
            self._record(
                "reading_faulted",
                {"bin_id": reading.bin_id, "seq": reading.seq, "distance_cm": reading.distance_cm},
                at=now,
            )
            return []
        heat = sensing.heat_flag(reading.inner_temp_c, self.ambient_ref_c, self.thresholds)
        was_armed = self._bin_armed[reading.bin_id]
        previous_heat = self._bin_heat[reading.bin_id]
        self._record(
            "reading_accepted",
            {
                "bin_id": reading.bin_id,
                "seq": reading.seq,
                "distance_cm": reading.distance_cm,
                "inner_temp_c": reading.inner_temp_c,
                "battery_pct": reading.battery_pct,
                "fill": fill,
                "heat": heat.value,
            },
            at=now,
        )
        alerts: List[str] = []
        if fill <= self.thresholds.yellow_at:
            open_full = self._open_alerts.get(("bin", reading.bin_id, AlertKind.FULL))
            if open_full is not None:
                self._record("alert_cleared", {"alert_id": open_full}, at=now)
        if fill >= self.thresholds.red_at and was_armed:
            alerts.append(self._raise_alert(AlertKind.FULL, "bin", reading.bin_id, b.location, now))
        if heat is HeatFlag.ANOMALY and previous_heat is not HeatFlag.ANOMALY:
            alerts.append(self._raise_alert(AlertKind.HEAT_ANOMALY, "bin", reading.bin_id, b.location, now))
        elif heat is not HeatFlag.ANOMALY:
            open_heat = self._open_alerts.get(("bin", reading.bin_id, AlertKind.HEAT_ANOMALY))
            if open_heat is not None:
                self._record("alert_cleared", {"alert_id": open_heat}, at=now)
        return alerts

    def ingest_station_observation(self, obs, now: int) -> List[str]:
        """Classify a station capture; alert on Full/Overflow with hysteresis."""
        if isinstance(obs, dict):
            obs = self._observation_from_dict(obs)
        if obs.station_id not in self.stations:
            raise UnknownStation(f"station {obs.station_id!r} not registered")
        status = sensing.classify_station_observation(obs, self.thresholds)
        station = self.stations[obs.station_id]
        level_before = self._station_level[obs.station_id]
        open_before = [
            self._open_alerts.get(("station", obs.station_id, kind))
            for kind in (AlertKind.FULL, AlertKind.OVERFLOW)
        ]
        self._record(
            "station_observed",
            {
                "station_id": obs.station_id,
                "status": status.value,
                "fill_estimate": obs.fill_estimate,
                "is_night": obs.is_night,
                "light_on": obs.light_on,
                "spillage_seen": obs.spillage_seen,
            },
            at=now,
        )
        alerts: List[str] = []
        if status in _STATION_SEVERITY:
            # Re-alert only on escalation; a repeat of the same status stays quiet
            # until an Empty observation re-arms the station.
            if _STATION_SEVERITY[status] > level_before:
                alerts.append(
                    self._raise_alert(_STATION_ALERT_KIND[status], "station", obs.station_id,
                                      station.location, now)
                )
        elif status is StationStatus.EMPTY:
            for alert_id in open_before:
                if alert_id is not None:
                    self._record("alert_cleared", {"alert_id": alert_id}, at=now)
        return alerts

    @staticmethod
    def _observation_from_dict(raw: dict) -> StationObservation:
        required = {"station_id", "captured_at", "is_night", "light_on", "fill_estimate", "spillage_seen"}
        missing = required - set(raw)
        if missing:
            raise MalformedBatch(f"observation missing fields: {sorted(missing)}")
        return StationObservation(
            station_id=str(raw["station_id"]),
            captured_at=int(raw["captured_at"]),
            is_night=bool(raw["is_night"]),
            light_on=bool(raw["light_on"]),
            fill_estimate=float(raw["fill_estimate"]),
            spillage_seen=bool(raw["spillage_seen"]),
        )

    def _raise_alert(self, kind: AlertKind, source_kind: str, source_id: str,
                     location: Optional[GeoPoint], now: int) -> str:
        alert_id = self._next_id("alert", "ALT")
        address = address_for(location) if location is not None else None
        self._record(
            "alert_raised",
            {
                "alert_id": alert_id,
                "kind": kind.value,
                "source_kind": source_kind,
                "source_id": source_id,
                "lat": None if location is None else location.lat,
                "lon": None if location is None else location.lon,
                "address_text": address,
            },
            at=now,
        )
        body = f"{kind.value} alert at {source_id}" + (f": {address}" if address else "")
        self._queue_team_notification(body, location, address, "alert", alert_id, now)
        return alert_id

    # ------------------------------------------------------------------
    # Notifications

    def _team_recipient(self) -> CrewInfo:
        if self.crews:
            return self.crews[min(self.crews)]
        return CrewInfo(crew_id="ops-team", smartphone=True)

    def _queue_team_notification(self, body: str, geo: Optional[GeoPoint], address: Optional[str],
                                 about_kind: str, about_id: str, now: int,
                                 crew: Optional[CrewInfo] = None) -> str:
        crew = crew or self._team_recipient()
        channel = Channel.PUSH if crew.smartphone else Channel.SMS
        return self._queue_notification(channel, crew.crew_id, body, geo, address,
                                        about_kind, about_id, now)

    def _queue_notification(self, channel: Channel, recipient: str, body: str,
                            geo: Optional[GeoPoint], address: Optional[str],
                            about_kind: str, about_id: str, now: int) -> str:
        notification_id = self._next_id("notification", "NTF")
        self._record(
            "notification_queued",
            {
                "notification_id": notification_id,
                "channel": channel.value,
                "recipient": recipient,
                "body": body,
                **_geo_payload(geo),
                "address_text": address,
                "about_kind": about_kind,
                "about_id": about_id,
            },
            at=now,
        )
        return notification_id

    def send_notification(self, notification_id: str, now: int) -> OutboxEntry:
        """Deliver one queued entry through its mock transport; idempotent."""
        entry = self.outbox.get(notification_id)
        if entry is None:
            raise UnknownTarget(f"notification {notification_id!r} not found")
        if entry.status == "Delivered":
            return entry
        latency = PUSH_LATENCY_MS if entry.notification.channel is Channel.PUSH else SMS_LATENCY_MS
        delivered_at = now + latency
        self._record("notification_delivered", {"notification_id": notification_id}, at=delivered_at)
        if entry.about_kind == "complaint-resolution":
            complaint = self.complaints[entry.about_id]
            if complaint.state is ComplaintState.RESOLVED:
                # Delivery of the feedback message is the citizen's acknowledgment.
                complaint_transition(complaint.state, "acknowledge")
                self._record("complaint_acknowledged", {"complaint_id": complaint.complaint_id},
                             at=delivered_at)
        return entry

    def deliver_due(self, now: int) -> List[OutboxEntry]:
        """Send every queued entry whose transport latency has elapsed by ``now``."""
        delivered = []
        for entry in list(self.outbox.values()):
            if entry.status == "Queued" and entry.due_at <= now:
                delivered.append(self.send_notification(entry.notification.notification_id,
                                                        now=entry.notification.queued_at))
        return delivered

    # ------------------------------------------------------------------
    # Citizens and complaints

    def register_citizen(self, nid: str, name: str, phone: str, now: int) -> Citizen:
        validate_nid(nid)
        if nid in self._nid_index:
            raise DuplicateNid(f"nid already registered to {self._nid_index[nid]}")
        citizen_id = self._next_id("citizen", "CIT")
        self._record(
            "citizen_registered",
            {"citizen_id": citizen_id, "nid": nid, "name": name, "phone": phone},
            at=now,
        )
        return self.citizens[citizen_id]

    def submit_complaint(self, citizen_id: str, photo_ref: str, device_location: GeoPoint,
                         location_override: Optional[GeoPoint], description: str, now: int) -> Complaint:
        if citizen_id not in self.citizens:
            raise UnknownCitizen(f"citizen {citizen_id!r} not registered")
        if not photo_ref:
            raise MissingPhoto("complaint requires a photo")
        location = location_override if location_override is not None else device_location
        address = address_for(location)
        complaint_id = self._next_id("complaint", "CMP")
        self._record(
            "complaint_submitted",
            {
                "complaint_id": complaint_id,
                "citizen_id": citizen_id,
                "photo_ref": photo_ref,
                "lat": location.lat,
                "lon": location.lon,
                "address_text": address,
                "description": description,
            },
            at=now,
        )
        self._queue_team_notification(
            f"New complaint {complaint_id} at {address}: {description}",
            location, address, "complaint-team", complaint_id, now,
        )
        return self.complaints[complaint_id]

    def dispatch_complaint(self, complaint_id: str, crew_id: str, now: int) -> Complaint:
        complaint = self._complaint_or_raise(complaint_id)
        if crew_id not in self.crews:
            raise UnknownCrew(f"crew {crew_id!r} not registered")
        complaint_transition(complaint.state, "dispatch")
        self._record("complaint_dispatched", {"complaint_id": complaint_id, "crew_id": crew_id}, at=now)
        self._queue_team_notification(
            f"Complaint {complaint_id} assigned to you: {complaint.address_text}",
            complaint.location, complaint.address_text, "complaint-dispatch", complaint_id, now,
            crew=self.crews[crew_id],
        )
        return complaint

    def resolve_complaint(self, complaint_id: str, crew_id: str, now: int) -> Complaint:
        complaint = self._complaint_or_raise(complaint_id)
        if crew_id not in self.crews:
            raise UnknownCrew(f"crew {crew_id!r} not registered")
        complaint_transition(complaint.state, "resolve")
        if complaint.assigned_crew != crew_id:
            raise WrongCrew(f"complaint assigned to {complaint.assigned_crew}, not {crew_id}")
        self._record("complaint_resolved", {"complaint_id": complaint_id, "crew_id": crew_id}, at=now)
        open_sla = self._open_alerts.get(("complaint", complaint_id, AlertKind.SLA_BREACH))
        if open_sla is not None:
            self._record("alert_cleared", {"alert_id": open_sla}, at=now)
        self._queue_notification(
            Channel.PUSH, complaint.citizen_id, RESOLUTION_BODY,
            complaint.location, complaint.address_text, "complaint-resolution", complaint_id, now,
        )
        return complaint

    def _complaint_or_raise(self, complaint_id: str) -> Complaint:
        complaint = self.complaints.get(complaint_id)
        if complaint is None:
            raise UnknownTarget(f"complaint {complaint_id!r} not found")
        return complaint

    def sla_sweep(self, now: int) -> List[str]:
        """Flag complaints older than the promised window; idempotent per complaint."""
        breached = []
        for complaint_id in sorted(self.complaints):
            c = self.complaints[complaint_id]
            if c.state in (ComplaintState.RESOLVED, ComplaintState.ACKNOWLEDGED):
                continue
            if complaint_id in self._sla_alerted:
                continue
            if c.submitted_at is None or now - c.submitted_at <= self.thresholds.sla_ms:
                continue
            breached.append(self._raise_alert(AlertKind.SLA_BREACH, "complaint", complaint_id,
                                              c.location, now))
        return breached

    # ------------------------------------------------------------------
    # Queries and snapshots

    def query_state(self, selector: str, since_seq: int = 0) -> dict:
        views = {
            "bins": lambda: [self._bin_view(b) for _, b in sorted(self.bins.items())],
            "stations": lambda: [self._station_view(s) for _, s in sorted(self.stations.items())],
            "alerts": lambda: [self._alert_view(a) for _, a in sorted(self.alerts.items())],
            "complaints": lambda: [self.complaint_view(c) for _, c in sorted(self.complaints.items())],
            "notifications": lambda: [self._outbox_view(o) for o in self.outbox.values()],
            "crews": lambda: [
                {"crew_id": c.crew_id, "smartphone": c.smartphone} for _, c in sorted(self.crews.items())
            ],
            "events": lambda: [e.as_dict() for e in self.events if e.seq > since_seq],
        }
        if selector not in views:
            raise UnknownSelector(f"unknown selector {selector!r}")
        return {"seq": self.last_seq, "items": views[selector]()}

    @staticmethod
    def _bin_view(b: SmartBin) -> dict:
        return {
            "bin_id": b.bin_id,
            "zone_id": b.zone_id,
            "lat": b.location.lat,
            "lon": b.location.lon,
            "depth_cm": b.geometry.depth_cm,
            "sensor_offset_cm": b.geometry.sensor_offset_cm,
            "fill_fraction": b.fill_fraction,
            "inner_temp_c": b.inner_temp_c,
            "led": b.led.value,
            "battery_pct": b.battery_pct,
            "last_report_seq": b.last_report_seq,
            "online": b.online,
        }

    @staticmethod
    def _station_view(s: WasteStation) -> dict:
        return {
            "station_id": s.station_id,
            "lat": s.location.lat,
            "lon": s.location.lon,
            "solar_light_on": s.solar_light_on,
            "status": s.status.value,
            "last_observation_at": s.last_observation_at,
        }

    @staticmethod
    def _alert_view(a: Alert) -> dict:
        return {
            "alert_id": a.alert_id,
            "source_kind": a.source_kind,
            "source_id": a.source_id,
            "kind": a.kind.value,
            "raised_at": a.raised_at,
            "cleared_at": a.cleared_at,
        }

    @staticmethod
    def complaint_view(c: Complaint) -> dict:
        return {
            "complaint_id": c.complaint_id,
            "citizen_id": c.citizen_id,
            "photo_ref": c.photo_ref,
            "lat": c.location.lat,
            "lon": c.location.lon,
            "address_text": c.address_text,
            "description": c.description,
            "state": c.state.value,
            "submitted_at": c.submitted_at,
            "dispatched_at": c.dispatched_at,
            "resolved_at": c.resolved_at,
            "assigned_crew": c.assigned_crew,
        }

    @staticmethod
    def _outbox_view(o: OutboxEntry) -> dict:
        n = o.notification
        return {
            "notification_id": n.notification_id,
            "channel": n.channel.value,
            "recipient": n.recipient,
            "body": n.body,
            **_geo_payload(n.geo),
            "address_text": n.address_text,
            "queued_at": n.queued_at,
            "delivered_at": n.delivered_at,
            "transport": o.transport,
            "status": o.status,
            "about_kind": o.about_kind,
            "about_id": o.about_id,
        }

    def snapshot(self) -> dict:
        """Full canonical state dump; equality is the event-sourcing oracle."""
        return {
            "seq": self.last_seq,
            "thresholds": self.thresholds.as_dict(),
            "ambient_ref_c": self.ambient_ref_c,
            "zones": [
                {
                    "zone_id": z.zone_id,
                    "wifi_available": z.wifi_available,
                    "wifi_outage": z.wifi_outage,
                    "poll_interval_s": z.poll_interval_s,
                    "bin_ids": sorted(z.bin_ids),
                }
                for _, z in sorted(self.zones.items())
            ],
            "bins": [self._bin_view(b) for _, b in sorted(self.bins.items())],
            "stations": [self._station_view(s) for _, s in sorted(self.stations.items())],
            "crews": [
                {"crew_id": c.crew_id, "smartphone": c.smartphone} for _, c in sorted(self.crews.items())
            ],
            "citizens": [
                {
                    "citizen_id": c.citizen_id,
                    "nid": c.nid,
                    "name": c.name,
                    "phone": c.phone,
                    "registered_at": c.registered_at,
                }
                for _, c in sorted(self.citizens.items())
            ],
            "complaints": [self.complaint_view(c) for _, c in sorted(self.complaints.items())],
            "alerts": [self._alert_view(a) for _, a in sorted(self.alerts.items())],
            "outbox": [self._outbox_view(o) for o in self.outbox.values()],
            "seen_seqs": {bin_id: sorted(s) for bin_id, s in sorted(self._seen_seqs.items())},
            "bin_armed": dict(sorted(self._bin_armed.items())),
            "bin_heat": {k: v.value for k, v in sorted(self._bin_heat.items())},
            "station_level": dict(sorted(self._station_level.items())),
            "sla_alerted": sorted(self._sla_alerted),
            "counters": dict(self._counters),
        }
