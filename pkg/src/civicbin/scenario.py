"""Scenario files: the versioned, human-readable configuration for a run.

A scenario is a JSON document with a ``schema: 1`` marker. Parsing is strict:
unknown keys and out-of-range values raise ``InvalidConfig`` naming the field,
so a typo never silently changes an experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from .domain import BinGeometry, GeoPoint, InvalidConfig, Thresholds
from .gateway import ChannelModel

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class HotLoad:
    """A deliberately hot parcel window for exercising heat anomalies."""

    at_s: int
    delta_c: float
    duration_s: int


@dataclass(frozen=True)
class BinSpec:
    bin_id: str
    zone_id: str
    location: GeoPoint
    geometry: BinGeometry
    capacity_liters: float
    arrival_rate_per_hour: float
    mean_parcel_liters: float
    initial_fill: float = 0.0
    initial_battery_pct: float = 100.0
    hot_loads: Tuple[HotLoad, ...] = ()


@dataclass(frozen=True)
class StationSpec:
    station_id: str
    location: GeoPoint
    capacity_liters: float
    arrival_rate_per_hour: float
    mean_parcel_liters: float
    capture_interval_s: int = 600
    solar_light_ok: bool = True


@dataclass(frozen=True)
class ZoneSpec:
    zone_id: str
    wifi_available: bool = True
    wifi_outage: bool = False
    poll_interval_s: int = 600


@dataclass(frozen=True)
class CrewSpec:
    crew_id: str
    travel_time_s: int = 300
    responsive: bool = True
    smartphone: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    duration_s: int
    zones: Tuple[ZoneSpec, ...]
    bins: Tuple[BinSpec, ...]
    stations: Tuple[StationSpec, ...] = ()
    crews: Tuple[CrewSpec, ...] = ()
    tick_s: int = 60
    day_start_s: int = 6 * 3600
    day_end_s: int = 18 * 3600
    complaint_rate_per_day: float = 0.0
    citizens: int = 0
    alerting_enabled: bool = True
    daily_pickup_time_s: Optional[int] = None
    ambient_day_c: float = 30.0
    ambient_night_c: float = 22.0
    ambient_ref_c: float = 25.0
    organic_temp_coeff_c: float = 6.0
    battery_drain_pct_per_h: float = 0.5
    solar_charge_pct_per_h: float = 4.0
    sweep_interval_s: int = 300
    thresholds: Thresholds = field(default_factory=Thresholds)
    channel: ChannelModel = field(default_factory=ChannelModel)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidConfig("duration_s", "must be positive")
        if self.tick_s <= 0:
            raise InvalidConfig("tick_s", "must be positive")
        if not 0 <= self.day_start_s < self.day_end_s <= 86400:
            raise InvalidConfig("day_start_s", "need 0 <= day_start_s < day_end_s <= 86400")
        if self.complaint_rate_per_day < 0:
            raise InvalidConfig("complaint_rate_per_day", "must be >= 0")
        if self.complaint_rate_per_day > 0 and self.citizens <= 0:
            raise InvalidConfig("citizens", "complaint generation needs citizens > 0")
        if self.daily_pickup_time_s is not None and not 0 <= self.daily_pickup_time_s < 86400:
            raise InvalidConfig("daily_pickup_time_s", "must be within one day")
        if self.sweep_interval_s <= 0:
            raise InvalidConfig("sweep_interval_s", "must be positive")
        zone_ids = [z.zone_id for z in self.zones]
        if len(zone_ids) != len(set(zone_ids)):
            raise InvalidConfig("zones", "duplicate zone_id")
        bin_ids = [b.bin_id for b in self.bins]
        if len(bin_ids) != len(set(bin_ids)):
            raise InvalidConfig("bins", "duplicate bin_id")
        station_ids = [s.station_id for s in self.stations]
        if len(station_ids) != len(set(station_ids)):
            raise InvalidConfig("stations", "duplicate station_id")
        crew_ids = [c.crew_id for c in self.crews]
        if len(crew_ids) != len(set(crew_ids)):
            raise InvalidConfig("crews", "duplicate crew_id")
        known_zones = set(zone_ids)
        for b in self.bins:
            if b.zone_id not in known_zones:
                raise InvalidConfig("bins", f"{b.bin_id} references unknown zone {b.zone_id!r}")
            if b.capacity_liters <= 0:
                raise InvalidConfig("bins", f"{b.bin_id}: capacity_liters must be positive")
            if b.arrival_rate_per_hour < 0 or b.mean_parcel_liters < 0:
                raise InvalidConfig("bins", f"{b.bin_id}: rates must be >= 0")
            if not 0.0 <= b.initial_fill <= 1.0:
                raise InvalidConfig("bins", f"{b.bin_id}: initial_fill must be in [0, 1]")
            if not 0.0 <= b.initial_battery_pct <= 100.0:
                raise InvalidConfig("bins", f"{b.bin_id}: initial_battery_pct must be in [0, 100]")
        for s in self.stations:
            if s.capacity_liters <= 0:
                raise InvalidConfig("stations", f"{s.station_id}: capacity_liters must be positive")
            if s.arrival_rate_per_hour < 0 or s.mean_parcel_liters < 0:
                raise InvalidConfig("stations", f"{s.station_id}: rates must be >= 0")
            if s.capture_interval_s <= 0:
                raise InvalidConfig("stations", f"{s.station_id}: capture_interval_s must be positive")
        for c in self.crews:
            if c.travel_time_s < 0:
                raise InvalidConfig("crews", f"{c.crew_id}: travel_time_s must be >= 0")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def with_alerting(self, enabled: bool) -> "ScenarioConfig":
        return replace(self, alerting_enabled=enabled)

    # -- serialization -----------------------------------------------------

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "tick_s": self.tick_s,
            "day_start_s": self.day_start_s,
            "day_end_s": self.day_end_s,
            "complaint_rate_per_day": self.complaint_rate_per_day,
            "citizens": self.citizens,
            "alerting_enabled": self.alerting_enabled,
            "daily_pickup_time_s": self.daily_pickup_time_s,
            "ambient_day_c": self.ambient_day_c,
            "ambient_night_c": self.ambient_night_c,
            "ambient_ref_c": self.ambient_ref_c,
            "organic_temp_coeff_c": self.organic_temp_coeff_c,
            "battery_drain_pct_per_h": self.battery_drain_pct_per_h,
            "solar_charge_pct_per_h": self.solar_charge_pct_per_h,
            "sweep_interval_s": self.sweep_interval_s,
            "thresholds": self.thresholds.as_dict(),
            "channel": self.channel.as_dict(),
            "zones": [
                {
                    "zone_id": z.zone_id,
                    "wifi_available": z.wifi_available,
                    "wifi_outage": z.wifi_outage,
                    "poll_interval_s": z.poll_interval_s,
                }
                for z in self.zones
            ],
            "bins": [
                {
                    "bin_id": b.bin_id,
                    "zone_id": b.zone_id,
                    "lat": b.location.lat,
                    "lon": b.location.lon,
                    "depth_cm": b.geometry.depth_cm,
                    "sensor_offset_cm": b.geometry.sensor_offset_cm,
                    "capacity_liters": b.capacity_liters,
                    "arrival_rate_per_hour": b.arrival_rate_per_hour,
                    "mean_parcel_liters": b.mean_parcel_liters,
                    "initial_fill": b.initial_fill,
                    "initial_battery_pct": b.initial_battery_pct,
                    "hot_loads": [
                        {"at_s": h.at_s, "delta_c": h.delta_c, "duration_s": h.duration_s}
                        for h in b.hot_loads
                    ],
                }
                for b in self.bins
            ],
            "stations": [
                {
                    "station_id": s.station_id,
                    "lat": s.location.lat,
                    "lon": s.location.lon,
                    "capacity_liters": s.capacity_liters,
                    "arrival_rate_per_hour": s.arrival_rate_per_hour,
                    "mean_parcel_liters": s.mean_parcel_liters,
                    "capture_interval_s": s.capture_interval_s,
                    "solar_light_ok": s.solar_light_ok,
                }
                for s in self.stations
            ],
            "crews": [
                {
                    "crew_id": c.crew_id,
                    "travel_time_s": c.travel_time_s,
                    "responsive": c.responsive,
                    "smartphone": c.smartphone,
                }
                for c in self.crews
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise InvalidConfig("scenario", "top level must be an object")
        if raw.get("schema") != SCHEMA_VERSION:
            raise InvalidConfig("schema", f"expected {SCHEMA_VERSION}, got {raw.get('schema')!r}")
        known = {
            "schema", "name", "seed", "duration_s", "tick_s", "day_start_s", "day_end_s",
            "complaint_rate_per_day", "citizens", "alerting_enabled", "daily_pickup_time_s",
            "ambient_day_c", "ambient_night_c", "ambient_ref_c", "organic_temp_coeff_c",
            "battery_drain_pct_per_h", "solar_charge_pct_per_h", "sweep_interval_s",
            "thresholds", "channel", "zones", "bins", "stations", "crews",
        }
        unknown = set(raw) - known
        if unknown:
            raise InvalidConfig("scenario", f"unknown fields: {sorted(unknown)}")
        for required in ("name", "seed", "duration_s", "zones", "bins"):
            if required not in raw:
                raise InvalidConfig(required, "missing required field")

        def sub(section, parser):
            try:
                return tuple(parser(entry) for entry in raw.get(section, []))
            except InvalidConfig:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidConfig(section, f"malformed entry: {exc}") from None

        zones = sub("zones", lambda z: ZoneSpec(
            zone_id=str(z["zone_id"]),
            wifi_available=bool(z.get("wifi_available", True)),
            wifi_outage=bool(z.get("wifi_outage", False)),
            poll_interval_s=int(z.get("poll_interval_s", 600)),
        ))
        bins = sub("bins", lambda b: BinSpec(
            bin_id=str(b["bin_id"]),
            zone_id=str(b["zone_id"]),
            location=GeoPoint(float(b["lat"]), float(b["lon"])),
            geometry=BinGeometry(float(b["depth_cm"]), float(b.get("sensor_offset_cm", 0.0))),
            capacity_liters=float(b["capacity_liters"]),
            arrival_rate_per_hour=float(b.get("arrival_rate_per_hour", 0.0)),
            mean_parcel_liters=float(b.get("mean_parcel_liters", 0.0)),
            initial_fill=float(b.get("initial_fill", 0.0)),
            initial_battery_pct=float(b.get("initial_battery_pct", 100.0)),
            hot_loads=tuple(
                HotLoad(at_s=int(h["at_s"]), delta_c=float(h["delta_c"]),
                        duration_s=int(h["duration_s"]))
                for h in b.get("hot_loads", [])
            ),
        ))
        stations = sub("stations", lambda s: StationSpec(
            station_id=str(s["station_id"]),
            location=GeoPoint(float(s["lat"]), float(s["lon"])),
            capacity_liters=float(s["capacity_liters"]),
            arrival_rate_per_hour=float(s.get("arrival_rate_per_hour", 0.0)),
            mean_parcel_liters=float(s.get("mean_parcel_liters", 0.0)),
            capture_interval_s=int(s.get("capture_interval_s", 600)),
            solar_light_ok=bool(s.get("solar_light_ok", True)),
        ))
        crews = sub("crews", lambda c: CrewSpec(
            crew_id=str(c["crew_id"]),
            travel_time_s=int(c.get("travel_time_s", 300)),
            responsive=bool(c.get("responsive", True)),
            smartphone=bool(c.get("smartphone", True)),
        ))
        try:
            thresholds = Thresholds.from_dict(raw.get("thresholds", {}))
        except TypeError as exc:
            raise InvalidConfig("thresholds", str(exc)) from None
        try:
            channel = ChannelModel.from_dict(raw.get("channel", {}))
        except Exception as exc:
            raise InvalidConfig("channel", str(exc)) from None
        pickup = raw.get("daily_pickup_time_s")
        return cls(
            name=str(raw["name"]),
            seed=int(raw["seed"]),
            duration_s=int(raw["duration_s"]),
            tick_s=int(raw.get("tick_s", 60)),
            day_start_s=int(raw.get("day_start_s", 6 * 3600)),
            day_end_s=int(raw.get("day_end_s", 18 * 3600)),
            complaint_rate_per_day=float(raw.get("complaint_rate_per_day", 0.0)),
            citizens=int(raw.get("citizens", 0)),
            alerting_enabled=bool(raw.get("alerting_enabled", True)),
            daily_pickup_time_s=None if pickup is None else int(pickup),
            ambient_day_c=float(raw.get("ambient_day_c", 30.0)),
            ambient_night_c=float(raw.get("ambient_night_c", 22.0)),
            ambient_ref_c=float(raw.get("ambient_ref_c", 25.0)),
            organic_temp_coeff_c=float(raw.get("organic_temp_coeff_c", 6.0)),
            battery_drain_pct_per_h=float(raw.get("battery_drain_pct_per_h", 0.5)),
            solar_charge_pct_per_h=float(raw.get("solar_charge_pct_per_h", 4.0)),
            sweep_interval_s=int(raw.get("sweep_interval_s", 300)),
            thresholds=thresholds,
            channel=channel,
            zones=zones,
            bins=bins,
            stations=stations,
            crews=crews,
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InvalidConfig("scenario", f"file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfig("scenario", f"{p}: invalid JSON: {exc}") from None
        return cls.from_dict(raw)
