"""HTTP surface of the central service (versioned under /api/v1).

All bodies are JSON. Mutations are serialized through one lock; reads see a
consistent snapshot tagged with the event seq it was taken at. The event
stream is Server-Sent Events, one StateEvent per message, resumable via
``?since=`` or the ``Last-Event-ID`` header.

Clock injection: with ``virtual_clock=True`` commands take their time from
the ``X-Virtual-Time-Ms`` request header (monotone, never moving backwards);
otherwise the wall clock is used and a background pump delivers due
notifications and runs SLA sweeps.
"""

from __future__ import annotations

import asyncio
import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .central import CentralService, StateEvent
from .domain import (
    BinGeometry,
    CivicbinError,
    Clock,
    GeoPoint,
    Thresholds,
    VirtualClock,
    WallClock,
)

SWEEP_INTERVAL_MS = 60_000
SNAPSHOT_EVERY = 500

_STATUS_BY_CODE = {
    "format_error": 422,
    "malformed_batch": 422,
    "invalid_config": 422,
    "missing_photo": 422,
    "out_of_range": 422,
    "duplicate_nid": 409,
    "invalid_transition": 409,
    "wrong_crew": 409,
    "crew_busy": 409,
    "unknown_citizen": 404,
    "unknown_crew": 404,
    "unknown_station": 404,
    "unknown_zone": 404,
    "unknown_target": 404,
    "unknown_selector": 404,
}


class ServiceRuntime:
    """Owns the service, its clock, and optional file persistence."""

    def __init__(self, service: Optional[CentralService] = None,
                 clock: Optional[Clock] = None,
                 state_dir: Optional[str] = None):
        self.service = service if service is not None else CentralService()
        self.clock = clock if clock is not None else WallClock()
        self.lock = threading.RLock()
        self.last_sweep_ms = 0
        self._log_fh = None
        self._state_dir = Path(state_dir) if state_dir else None
        if self._state_dir is not None:
            self._state_dir.mkdir(parents=True, exist_ok=True)
            persisted = self._read_persisted()
            if persisted:
                # The durable log wins over any in-memory pre-seeding.
                self.service = CentralService.replay(persisted)
            self._log_fh = open(self._state_dir / "events.log", "a", encoding="utf-8")
            persisted_max = persisted[-1].seq if persisted else 0
            for event in self.service.events:
                if event.seq > persisted_max:
                    self._log_fh.write(event.to_line() + "\n")
            self._log_fh.flush()
        self.service.listeners.append(self._on_event)

    def _read_persisted(self) -> list:
        log_path = self._state_dir / "events.log"
        if not log_path.exists():
            return []
        events = []
        with open(log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(StateEvent(**json.loads(line)))
        return events

    def _on_event(self, event: StateEvent) -> None:
        if self._log_fh is not None:
            self._log_fh.write(event.to_line() + "\n")
            self._log_fh.flush()
            if event.seq % SNAPSHOT_EVERY == 0:
                self.write_snapshot()

    def write_snapshot(self) -> None:
        if self._state_dir is None:
            return
        tmp = self._state_dir / "snapshot.json.tmp"
        tmp.write_text(json.dumps(self.service.snapshot(), sort_keys=True), encoding="utf-8")
        tmp.replace(self._state_dir / "snapshot.json")

    def close(self) -> None:
        if self._state_dir is not None:
            self.write_snapshot()
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    def resolve_now(self, request: Request) -> int:
        if isinstance(self.clock, VirtualClock):
            header = request.headers.get("x-virtual-time-ms")
            if header is not None:
                try:
                    self.clock.advance_to(int(header))
                except ValueError:
                    pass
        return self.clock.now_ms()

    def pump(self, now: int) -> None:
        """Deliver due notifications; sweep SLAs on its interval."""
        self.service.deliver_due(now)
        if now - self.last_sweep_ms >= SWEEP_INTERVAL_MS:
            self.last_sweep_ms = now
            self.service.sla_sweep(now)
            self.service.deliver_due(now)


def _geo_from(raw: Optional[dict], field: str) -> Optional[GeoPoint]:
    if raw is None:
        return None
    try:
        return GeoPoint(float(raw["lat"]), float(raw["lon"]))
    except (KeyError, TypeError, ValueError):
        raise CivicbinError(f"{field} must be an object with numeric lat/lon") from None


def create_app(service: Optional[CentralService] = None,
               clock: Optional[Clock] = None,
               state_dir: Optional[str] = None,
               virtual_clock: bool = False,
               static_dir: Optional[str] = None) -> FastAPI:
    if clock is None:
        clock = VirtualClock() if virtual_clock else WallClock()
    runtime = ServiceRuntime(service=service, clock=clock, state_dir=state_dir)
    wall_mode = not isinstance(clock, VirtualClock)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app):
        task = None
        if wall_mode:

            async def ticker():
                while True:
                    with runtime.lock:
                        runtime.pump(runtime.clock.now_ms())
                    await asyncio.sleep(0.2)

            task = asyncio.create_task(ticker())
        try:
            yield
        finally:
            if task is not None:
                task.cancel()
            runtime.close()

    app = FastAPI(title="civicbin central", version="1", lifespan=lifespan)
    app.state.runtime = runtime

    @app.exception_handler(CivicbinError)
    async def on_domain_error(request: Request, exc: CivicbinError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "detail": str(exc)})

    # ------------------------------------------------------------------
    # Ingestion

    @app.post("/api/v1/reports")
    async def post_report(request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        with runtime.lock:
            result = runtime.service.ingest_batch(body, now=now)
            runtime.pump(now)
            return {**result.as_dict(), "seq": runtime.service.last_seq}

    @app.post("/api/v1/observations")
    async def post_observation(request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        with runtime.lock:
            alerts = runtime.service.ingest_station_observation(body, now=now)
            runtime.pump(now)
            return {"alerts_raised": alerts, "seq": runtime.service.last_seq}

    # ------------------------------------------------------------------
    # Citizens and complaints

    @app.post("/api/v1/citizens")
    async def post_citizen(request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        with runtime.lock:
            citizen = runtime.service.register_citizen(
                nid=str(body.get("nid", "")),
                name=str(body.get("name", "")),
                phone=str(body.get("phone", "")),
                now=now,
            )
            return {
                "citizen_id": citizen.citizen_id,
                "nid": citizen.nid,
                "name": citizen.name,
                "phone": citizen.phone,
                "registered_at": citizen.registered_at,
                "seq": runtime.service.last_seq,
            }

    @app.post("/api/v1/complaints")
    async def post_complaint(request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        device = _geo_from(body.get("device_location"), "device_location")
        if device is None:
            raise CivicbinError("device_location is required")
        override = _geo_from(body.get("location_override"), "location_override")
        with runtime.lock:
            complaint = runtime.service.submit_complaint(
                citizen_id=str(body.get("citizen_id", "")),
                photo_ref=str(body.get("photo_ref", "")),
                device_location=device,
                location_override=override,
                description=str(body.get("description", "")),
                now=now,
            )
            runtime.pump(now)
            return {**runtime.service.complaint_view(complaint),
                    "seq": runtime.service.last_seq}

    @app.post("/api/v1/complaints/{complaint_id}/dispatch")
    async def post_dispatch(complaint_id: str, request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        with runtime.lock:
            complaint = runtime.service.dispatch_complaint(
                complaint_id, str(body.get("crew_id", "")), now=now)
            runtime.pump(now)
            return {**runtime.service.complaint_view(complaint),
                    "seq": runtime.service.last_seq}

    @app.post("/api/v1/complaints/{complaint_id}/resolve")
    async def post_resolve(complaint_id: str, request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        with runtime.lock:
            complaint = runtime.service.resolve_complaint(
                complaint_id, str(body.get("crew_id", "")), now=now)
            runtime.pump(now)
            return {**runtime.service.complaint_view(complaint),
                    "seq": runtime.service.last_seq}

    # ------------------------------------------------------------------
    # Registry seeding (operator plumbing for live mode)

    @app.post("/api/v1/registry")
    async def post_registry(request: Request):
        body = await request.json()
        now = runtime.resolve_now(request)
        added = {"zones": 0, "bins": 0, "stations": 0, "crews": 0}
        with runtime.lock:
            svc = runtime.service
            if body.get("thresholds") is not None:
                svc.set_thresholds(Thresholds.from_dict(body["thresholds"]), now=now,
                                   ambient_ref_c=body.get("ambient_ref_c"))
            for z in body.get("zones", []):
                if z["zone_id"] not in svc.zones:
                    svc.register_zone(z["zone_id"], bool(z.get("wifi_available", True)),
                                      bool(z.get("wifi_outage", False)),
                                      int(z.get("poll_interval_s", 600)), now=now)
                    added["zones"] += 1
            for b in body.get("bins", []):
                if b["bin_id"] not in svc.bins:
                    svc.register_bin(
                        b["bin_id"], b["zone_id"],
                        GeoPoint(float(b["lat"]), float(b["lon"])),
                        BinGeometry(float(b["depth_cm"]), float(b.get("sensor_offset_cm", 0.0))),
                        now=now,
                    )
                    added["bins"] += 1
            for s in body.get("stations", []):
                if s["station_id"] not in svc.stations:
                    svc.register_station(
                        s["station_id"], GeoPoint(float(s["lat"]), float(s["lon"])), now=now)
                    added["stations"] += 1
            for c in body.get("crews", []):
                if c["crew_id"] not in svc.crews:
                    svc.register_crew(c["crew_id"], bool(c.get("smartphone", True)), now=now)
                    added["crews"] += 1
            return {**added, "seq": svc.last_seq}

    # ------------------------------------------------------------------
    # Snapshots

    def _snapshot_endpoint(selector: str):
        async def handler(request: Request):
            with runtime.lock:
                return runtime.service.query_state(selector)

        return handler

    for selector in ("bins", "stations", "alerts", "complaints", "notifications", "crews"):
        app.get(f"/api/v1/{selector}")(_snapshot_endpoint(selector))

    @app.get("/api/v1/health")
    async def health(request: Request):
        # Doubles as the virtual-clock tick: advancing time here pumps
        # deliveries and the SLA sweep without requiring a mutation.
        now = runtime.resolve_now(request)
        with runtime.lock:
            runtime.pump(now)
            return {
                "status": "ok",
                "seq": runtime.service.last_seq,
                "clock": "virtual" if isinstance(runtime.clock, VirtualClock) else "wall",
                "now_ms": now,
            }

    # ------------------------------------------------------------------
    # Event stream

    @app.get("/api/v1/events")
    async def events(request: Request, since: int = 0, limit: int = 0):
        """One StateEvent per SSE message, in seq order, resumable.

        ``limit > 0`` closes the stream after that many events (handy for
        scripted drains); the default follows forever with keep-alives.
        """
        last_id = request.headers.get("last-event-id")
        if last_id is not None:
            try:
                since = max(since, int(last_id))
            except ValueError:
                pass

        async def stream(cursor: int):
            sent = 0
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                with runtime.lock:
                    pending = [e for e in runtime.service.events if e.seq > cursor]
                if pending:
                    for event in pending:
                        yield f"id: {event.seq}\ndata: {event.to_line()}\n\n"
                        cursor = event.seq
                        sent += 1
                        if limit and sent >= limit:
                            return
                    idle = 0.0
                else:
                    await asyncio.sleep(0.05)
                    idle += 0.05
                    if idle >= 15.0:
                        idle = 0.0
                        yield ": keep-alive\n\n"

        return StreamingResponse(stream(since), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache",
                                          "X-Accel-Buffering": "no"})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
