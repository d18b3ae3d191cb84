"""Deterministic discrete-event simulation of a city of smart bins, waste
stations, fog gateways, crews, and complaining citizens.

One ``World`` owns an in-process ``CentralService``; every state change in
either lands in a single line-delimited event log whose bytes are a pure
function of the scenario config (integer-millisecond clock, named PRNG,
sorted iteration everywhere). Metrics are never read from counters: the run
re-derives them from its own log through ``logreader``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional

from . import logreader
from .canon import config_hash, stable_phase
from .central import SMS_LATENCY_MS, CentralService
from .domain import (
    ComplaintState,
    CrewBusy,
    GeoPoint,
    LedColor,
    UnknownCrew,
    UnknownTarget,
    Zone,
)
from .gateway import BinReading, Gateway, select_uplink
from .eventlog import EventLog
from .rng import ALGORITHM, DeterministicRng, derive_stream_seed
from .scenario import BinSpec, CrewSpec, ScenarioConfig, StationSpec
from .sensing import distance_for_fill, led_state

DAY_MS = 86_400_000
DRAIN_INTERVAL_MS = 600_000
MAX_DRAIN_CYCLES = 200

COMPLAINT_TOPICS = (
    "overflowing roadside pile",
    "waste dumped by the market",
    "uncollected garbage near the school",
    "smelly heap beside the bus stop",
    "litter spread across the park entrance",
)


def waste_arrival_volume(rate_per_hour: float, mean_parcel_liters: float,
                         dt_s: float, rng: DeterministicRng) -> float:
    """Liters arriving in a window: Poisson parcel count times mean parcel size.

    Draws from ``rng`` even at rate zero, so the stream position is a function
    of the call count alone.
    """
    if rate_per_hour < 0:
        raise ValueError("rate_per_hour must be >= 0")
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")
    count = rng.poisson(rate_per_hour * dt_s / 3600.0)
    return count * mean_parcel_liters


@dataclass
class SimBin:
    spec: BinSpec
    content_liters: float
    battery_pct: float
    inner_temp_c: float
    online: bool = True
    led: LedColor = LedColor.GREEN
    next_seq: int = 1

    @property
    def fill(self) -> float:
        return self.content_liters / self.spec.capacity_liters


@dataclass
class SimStation:
    spec: StationSpec
    content_liters: float = 0.0
    spilled_since_collection: bool = False

    @property
    def fill(self) -> float:
        return self.content_liters / self.spec.capacity_liters


@dataclass
class SimCrew:
    spec: CrewSpec
    busy: bool = False


class World:
    """Mutable simulation state; advanced exclusively through ``step``."""

    def __init__(self, config: ScenarioConfig, log: Optional["EventLog"] = None):
        self.config = config
        self.now_ms = 0
        # Separate streams: channel noise must not shift load/complaint draws.
        self.rng = DeterministicRng(config.seed)
        self.channel_rng = DeterministicRng(derive_stream_seed(config.seed, "channel"))
        self.log = log if log is not None else EventLog()
        self._heap: list = []
        self._heap_seq = 0
        self._photo_counter = 0
        self.work_queue: List[tuple] = []
        self._pending_targets: set = set()
        self.citizen_ids: List[str] = []

        self.log.append(0, "log.header", {
            "schema": 1,
            "rng": ALGORITHM,
            "seed": config.seed,
            "config_hash": config_hash(config.as_dict()),
            "name": config.name,
        })

        self.central = CentralService()
        # Payloads may carry their own "seq" (reading counters), so the
        # service's event sequence gets a distinct key.
        self.central.listeners.append(
            lambda e: self.log.append(e.at, f"central.{e.kind}", {**e.payload, "event_seq": e.seq})
        )
        self.central.set_thresholds(config.thresholds, now=0, ambient_ref_c=config.ambient_ref_c)

        self.zones = {}
        for z in sorted(config.zones, key=lambda z: z.zone_id):
            self.zones[z.zone_id] = Zone(
                zone_id=z.zone_id,
                wifi_available=z.wifi_available,
                wifi_outage=z.wifi_outage,
                poll_interval_s=z.poll_interval_s,
            )
            self.central.register_zone(z.zone_id, z.wifi_available, z.wifi_outage,
                                       z.poll_interval_s, now=0)

        self.bins = {}
        for spec in sorted(config.bins, key=lambda b: b.bin_id):
            ambient = self._ambient_at(0)
            self.bins[spec.bin_id] = SimBin(
                spec=spec,
                content_liters=spec.initial_fill * spec.capacity_liters,
                battery_pct=spec.initial_battery_pct,
                inner_temp_c=ambient,
                online=spec.initial_battery_pct > 0,
                led=led_state(spec.initial_fill, config.thresholds),
            )
            self.zones[spec.zone_id].bin_ids.add(spec.bin_id)
            self.central.register_bin(spec.bin_id, spec.zone_id, spec.location,
                                      spec.geometry, now=0)

        self.stations = {}
        for spec in sorted(config.stations, key=lambda s: s.station_id):
            self.stations[spec.station_id] = SimStation(spec=spec)
            self.central.register_station(spec.station_id, spec.location, now=0)

        self.crews = {}
        for spec in sorted(config.crews, key=lambda c: c.crew_id):
            self.crews[spec.crew_id] = SimCrew(spec=spec)
            self.central.register_crew(spec.crew_id, spec.smartphone, now=0)

        for i in range(config.citizens):
            citizen = self.central.register_citizen(
                nid=str(1_700_000_000 + i),
                name=f"Citizen {i + 1:03d}",
                phone=f"+880170000{i:04d}",
                now=0,
            )
            self.citizen_ids.append(citizen.citizen_id)

        self.gateways = {zid: Gateway(gateway_id=f"gw-{zid}") for zid in sorted(self.zones)}

        # Seed fill entries give the log reader complete initial state.
        for bin_id in sorted(self.bins):
            b = self.bins[bin_id]
            self._log_bin_fill(bin_id, liters_added=b.content_liters, overflow=0.0, at=0)
        for station_id in sorted(self.stations):
            s = self.stations[station_id]
            self._log_station_fill(station_id, liters_added=s.content_liters, overflow=0.0, at=0)

        for zone_id in sorted(self.zones):
            interval_ms = self.zones[zone_id].poll_interval_s * 1000
            self._schedule(stable_phase(zone_id, interval_ms), "poll", {"zone_id": zone_id})
        for station_id in sorted(self.stations):
            interval_ms = self.stations[station_id].spec.capture_interval_s * 1000
            self._schedule(stable_phase(station_id, interval_ms), "capture",
                           {"station_id": station_id})
        if config.daily_pickup_time_s is not None:
            self._schedule(config.daily_pickup_time_s * 1000, "pickup", {})
        self._schedule(config.sweep_interval_s * 1000, "sweep", {})

    # ------------------------------------------------------------------
    # Scheduling

    def _schedule(self, t_ms: int, kind: str, payload: dict) -> None:
        self._heap_seq += 1
        heapq.heappush(self._heap, (int(t_ms), self._heap_seq, kind, payload))

    def _ambient_at(self, t_ms: int) -> float:
        tod = (t_ms // 1000) % 86400
        if self.config.day_start_s <= tod < self.config.day_end_s:
            return self.config.ambient_day_c
        return self.config.ambient_night_c

    def _is_day(self, t_ms: int) -> bool:
        tod = (t_ms // 1000) % 86400
        return self.config.day_start_s <= tod < self.config.day_end_s

    # ------------------------------------------------------------------
    # Stepping

    def step(self, dt_s: float) -> "World":
        """Advance the world: fire due events, then apply this window's
        arrivals, temperature drift, power changes, and citizen complaints."""
        if dt_s <= 0:
            raise ValueError("dt_s must be positive")
        target = self.now_ms + round(dt_s * 1000)
        while self._heap and self._heap[0][0] <= target:
            t, _, kind, payload = heapq.heappop(self._heap)
            self.now_ms = max(self.now_ms, t)
            getattr(self, f"_on_{kind}")(payload, t)
        self.now_ms = target
        self._apply_window(dt_s, target)
        self.central.deliver_due(target)
        self._assign_work()
        self.log.append(target, "sim.tick", {"dt_ms": round(dt_s * 1000)})
        return self

    def _apply_window(self, dt_s: float, at: int) -> None:
        t = self.config.thresholds
        ambient = self._ambient_at(at)
        is_day = self._is_day(at)
        for bin_id in sorted(self.bins):
            b = self.bins[bin_id]
            spec = b.spec
            liters = waste_arrival_volume(spec.arrival_rate_per_hour,
                                          spec.mean_parcel_liters, dt_s, self.rng)
            overflow = 0.0
            if liters > 0:
                new_content = b.content_liters + liters
                if new_content > spec.capacity_liters:
                    overflow = new_content - spec.capacity_liters
                    new_content = spec.capacity_liters
                b.content_liters = new_content
            boost = 0.0
            for hot in spec.hot_loads:
                if hot.at_s * 1000 <= at < (hot.at_s + hot.duration_s) * 1000:
                    boost = max(boost, hot.delta_c)
            b.inner_temp_c = ambient + self.config.organic_temp_coeff_c * b.fill + boost

            drained = self.config.battery_drain_pct_per_h * dt_s / 3600.0
            charged = self.config.solar_charge_pct_per_h * dt_s / 3600.0 if is_day else 0.0
            b.battery_pct = min(100.0, max(0.0, b.battery_pct - drained + charged))
            was_online = b.online
            if b.battery_pct <= 0.0:
                b.online = False
            elif not b.online and b.battery_pct >= 10.0:
                b.online = True
            if b.online != was_online:
                self.log.append(at, "sim.bin_power",
                                {"bin_id": bin_id, "battery_pct": b.battery_pct,
                                 "online": b.online})

            new_led = led_state(b.fill, t)
            if liters > 0 or new_led != b.led:
                b.led = new_led
                self._log_bin_fill(bin_id, liters_added=liters, overflow=overflow, at=at)

        for station_id in sorted(self.stations):
            s = self.stations[station_id]
            spec = s.spec
            liters = waste_arrival_volume(spec.arrival_rate_per_hour,
                                          spec.mean_parcel_liters, dt_s, self.rng)
            if liters <= 0:
                continue
            overflow = 0.0
            new_content = s.content_liters + liters
            if new_content > spec.capacity_liters:
                overflow = new_content - spec.capacity_liters
                new_content = spec.capacity_liters
                s.spilled_since_collection = True
            s.content_liters = new_content
            self._log_station_fill(station_id, liters_added=liters, overflow=overflow, at=at)

        if self.config.complaint_rate_per_day > 0 and self.citizen_ids:
            n = self.rng.poisson(self.config.complaint_rate_per_day * dt_s / 86400.0)
            for _ in range(n):
                self._submit_random_complaint(at)

    def _log_bin_fill(self, bin_id: str, liters_added: float, overflow: float, at: int) -> None:
        b = self.bins[bin_id]
        self.log.append(at, "sim.bin_fill", {
            "bin_id": bin_id,
            "liters_added": liters_added,
            "overflow_liters": overflow,
            "content_liters": b.content_liters,
            "fill": b.fill,
            "led": b.led.value,
            "inner_temp_c": b.inner_temp_c,
        })

    def _log_station_fill(self, station_id: str, liters_added: float, overflow: float, at: int) -> None:
        s = self.stations[station_id]
        self.log.append(at, "sim.station_fill", {
            "station_id": station_id,
            "liters_added": liters_added,
            "overflow_liters": overflow,
            "content_liters": s.content_liters,
            "fill": s.fill,
            "spillage": s.spilled_since_collection,
        })

    def _submit_random_complaint(self, at: int) -> None:
        citizen_id = self.rng.choice(self.citizen_ids)
        if self.bins:
            anchor = self.bins[self.rng.choice(sorted(self.bins))].spec.location
        elif self.stations:
            anchor = self.stations[self.rng.choice(sorted(self.stations))].spec.location
        else:
            anchor = GeoPoint(0.0, 0.0)
        location = GeoPoint(
            max(-90.0, min(90.0, anchor.lat + (self.rng.uniform() - 0.5) * 0.01)),
            max(-180.0, min(180.0, anchor.lon + (self.rng.uniform() - 0.5) * 0.01)),
        )
        self._photo_counter += 1
        complaint = self.central.submit_complaint(
            citizen_id=citizen_id,
            photo_ref=f"photo-{self._photo_counter:06d}",
            device_location=location,
            location_override=None,
            description=self.rng.choice(COMPLAINT_TOPICS),
            now=at,
        )
        self._enqueue_work("complaint", complaint.complaint_id)

    # ------------------------------------------------------------------
    # Event handlers

    def _on_poll(self, payload: dict, t: int) -> None:
        zone_id = payload["zone_id"]
        zone = self.zones[zone_id]
        gateway = self.gateways[zone_id]
        uplink = select_uplink(zone)
        batch = gateway.poll_zone(zone, self._read_bin, now=t, uplink=uplink)
        if batch is not None:
            self.log.append(t, "gateway.poll", {
                "gateway_id": gateway.gateway_id,
                "zone_id": zone_id,
                "uplink": uplink.value,
                "sent_at": batch.sent_at,
                "readings": [r.as_dict() for r in batch.readings],
                "missing": list(batch.missing),
            })
        self._run_send_cycle(gateway, batch, uplink, t, schedule_ingest=True)
        self._schedule(t + zone.poll_interval_s * 1000, "poll", {"zone_id": zone_id})

    def _run_send_cycle(self, gateway: Gateway, batch, uplink, t: int,
                        schedule_ingest: bool) -> list:
        outcomes = gateway.send_cycle(batch, uplink, self.config.channel, self.channel_rng, now=t)
        for sent, result, delivered_at in outcomes:
            self.log.append(t, "gateway.transmit", {
                "gateway_id": gateway.gateway_id,
                "zone_id": sent.zone_id,
                "batch_sent_at": sent.sent_at,
                "uplink": uplink.value,
                "status": result.status.value,
                "attempts": result.attempts,
                "elapsed_ms": result.elapsed_ms,
                "delivered_at": delivered_at,
            })
            if delivered_at is not None and schedule_ingest:
                self._schedule(delivered_at, "ingest", {"wire": sent.to_wire()})
        return outcomes

    def _read_bin(self, bin_id: str, now: int) -> Optional[BinReading]:
        b = self.bins[bin_id]
        if not b.online:
            return None
        seq = b.next_seq
        b.next_seq += 1
        return BinReading(
            bin_id=bin_id,
            seq=seq,
            distance_cm=distance_for_fill(b.fill, b.spec.geometry),
            inner_temp_c=b.inner_temp_c,
            battery_pct=b.battery_pct,
        )

    def _on_ingest(self, payload: dict, t: int) -> None:
        result = self.central.ingest_batch(payload["wire"], now=t)
        self._dispatch_for_alerts(result.alerts_raised)

    def _on_capture(self, payload: dict, t: int) -> None:
        station_id = payload["station_id"]
        s = self.stations[station_id]
        is_night = not self._is_day(t)
        obs = {
            "station_id": station_id,
            "captured_at": t,
            "is_night": is_night,
            "light_on": is_night and s.spec.solar_light_ok,
            "fill_estimate": min(1.2, s.fill),
            "spillage_seen": s.spilled_since_collection,
        }
        alerts = self.central.ingest_station_observation(obs, now=t)
        self._dispatch_for_alerts(alerts)
        self._schedule(t + s.spec.capture_interval_s * 1000, "capture",
                       {"station_id": station_id})

    def _dispatch_for_alerts(self, alert_ids: list) -> None:
        if not self.config.alerting_enabled:
            return
        for alert_id in alert_ids:
            alert = self.central.alerts[alert_id]
            if alert.source_kind in ("bin", "station"):
                self._enqueue_work(alert.source_kind, alert.source_id)

    def _on_crew_done(self, payload: dict, t: int) -> None:
        crew_id = payload["crew_id"]
        target_kind, target_id = payload["target_kind"], payload["target_id"]
        if target_kind == "bin":
            self._collect_bin(target_id, by=crew_id, at=t)
        elif target_kind == "station":
            self._collect_station(target_id, by=crew_id, at=t)
        else:
            self.central.resolve_complaint(target_id, crew_id, now=t)
        self.crews[crew_id].busy = False
        self._pending_targets.discard((target_kind, target_id))
        self.log.append(t, "sim.crew_idle", {"crew_id": crew_id})
        self._assign_work()

    def _collect_bin(self, bin_id: str, by: str, at: int) -> None:
        b = self.bins[bin_id]
        removed = b.content_liters
        b.content_liters = 0.0
        b.led = LedColor.GREEN
        self.log.append(at, "sim.collection", {
            "target_kind": "bin",
            "target_id": bin_id,
            "liters_removed": removed,
            "by": by,
        })

    def _collect_station(self, station_id: str, by: str, at: int) -> None:
        s = self.stations[station_id]
        removed = s.content_liters
        s.content_liters = 0.0
        s.spilled_since_collection = False
        self.log.append(at, "sim.collection", {
            "target_kind": "station",
            "target_id": station_id,
            "liters_removed": removed,
            "by": by,
        })

    def _on_pickup(self, payload: dict, t: int) -> None:
        for bin_id in sorted(self.bins):
            self._collect_bin(bin_id, by="scheduled", at=t)
        for station_id in sorted(self.stations):
            self._collect_station(station_id, by="scheduled", at=t)
        self._schedule(t + DAY_MS, "pickup", {})

    def _on_sweep(self, payload: dict, t: int) -> None:
        self.central.sla_sweep(now=t)
        self._schedule(t + self.config.sweep_interval_s * 1000, "sweep", {})

    # ------------------------------------------------------------------
    # Crews

    def crew_service(self, crew_id: str, target_kind: str, target_id: str) -> None:
        """Send a crew to empty a bin/station or work a complaint.

        The service completes (and is logged) after the crew's travel time.
        """
        crew = self.crews.get(crew_id)
        if crew is None:
            raise UnknownCrew(f"crew {crew_id!r} not in scenario")
        if crew.busy:
            raise CrewBusy(f"crew {crew_id} is already dispatched")
        if target_kind == "bin":
            if target_id not in self.bins:
                raise UnknownTarget(f"bin {target_id!r} not in scenario")
        elif target_kind == "station":
            if target_id not in self.stations:
                raise UnknownTarget(f"station {target_id!r} not in scenario")
        elif target_kind == "complaint":
            if target_id not in self.central.complaints:
                raise UnknownTarget(f"complaint {target_id!r} not found")
            self.central.dispatch_complaint(target_id, crew_id, now=self.now_ms)
        else:
            raise UnknownTarget(f"unknown target kind {target_kind!r}")
        crew.busy = True
        eta = self.now_ms + crew.spec.travel_time_s * 1000
        self.log.append(self.now_ms, "sim.crew_dispatch", {
            "crew_id": crew_id,
            "target_kind": target_kind,
            "target_id": target_id,
            "eta_ms": eta,
        })
        self._schedule(eta, "crew_done", {
            "crew_id": crew_id, "target_kind": target_kind, "target_id": target_id,
        })

    def _enqueue_work(self, target_kind: str, target_id: str) -> None:
        key = (target_kind, target_id)
        if key in self._pending_targets:
            return
        self._pending_targets.add(key)
        self.work_queue.append(key)
        self._assign_work()

    def _idle_responsive_crews(self) -> List[str]:
        return [cid for cid in sorted(self.crews)
                if self.crews[cid].spec.responsive and not self.crews[cid].busy]

    def _assign_work(self) -> None:
        idle = self._idle_responsive_crews()
        while idle and self.work_queue:
            target_kind, target_id = self.work_queue.pop(0)
            if self._work_is_stale(target_kind, target_id):
                self._pending_targets.discard((target_kind, target_id))
                continue
            self.crew_service(idle.pop(0), target_kind, target_id)

    def _work_is_stale(self, target_kind: str, target_id: str) -> bool:
        t = self.config.thresholds
        if target_kind == "bin":
            return self.bins[target_id].fill < t.red_at
        if target_kind == "station":
            s = self.stations[target_id]
            return s.fill < t.red_at and not s.spilled_since_collection
        return self.central.complaints[target_id].state is not ComplaintState.SUBMITTED

    # ------------------------------------------------------------------
    # Run epilogue

    def finish(self) -> None:
        """Close the run: log the end marker, flush gateway buffers
        (store-and-forward keeps retrying past the horizon), then deliver
        any still-queued notifications."""
        duration_ms = self.config.duration_s * 1000
        self.log.append(duration_ms, "sim.end", {"duration_ms": duration_ms})
        t = duration_ms
        for _ in range(MAX_DRAIN_CYCLES):
            if not any(self.gateways[z].buffer for z in self.gateways):
                break
            t += DRAIN_INTERVAL_MS
            for zone_id in sorted(self.gateways):
                gateway = self.gateways[zone_id]
                if not gateway.buffer:
                    continue
                uplink = select_uplink(self.zones[zone_id])
                outcomes = self._run_send_cycle(gateway, None, uplink, t, schedule_ingest=False)
                for sent, result, delivered_at in outcomes:
                    if delivered_at is not None:
                        self.central.ingest_batch(sent.to_wire(), now=delivered_at)
        self.central.deliver_due(t + SMS_LATENCY_MS + 1)


def step(world: World, dt_s: float) -> World:
    return world.step(dt_s)


def crew_service(world: World, crew_id: str, target_kind: str, target_id: str) -> World:
    world.crew_service(crew_id, target_kind, target_id)
    return world


@dataclass
class SimulationRun:
    world: World
    metrics: "logreader.Metrics"
    log_lines: List[str]


def run_scenario(config: ScenarioConfig, log: Optional["EventLog"] = None) -> SimulationRun:
    """Run a scenario to its horizon and compute metrics from the log alone."""
    world = World(config, log=log)
    duration_ms = config.duration_s * 1000
    tick_ms = config.tick_s * 1000
    while world.now_ms < duration_ms:
        dt_ms = min(tick_ms, duration_ms - world.now_ms)
        world.step(dt_ms / 1000.0)
    world.finish()
    metrics = logreader.analyze(world.log.lines).metrics
    return SimulationRun(world=world, metrics=metrics, log_lines=world.log.lines)
