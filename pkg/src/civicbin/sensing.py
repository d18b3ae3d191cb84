"""Pure sensor math: ultrasonic ranging to fill fraction, LED law, heat
heuristics, and camera-observation classification for waste stations.

Everything here is a pure function of its inputs; no clocks, no state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import (
    BinGeometry,
    CivicbinError,
    HeatFlag,
    InvalidConfig,
    LedColor,
    StationStatus,
    Thresholds,
)

# Readings this far outside the physical window are sensor faults rather than
# jitter to clamp.
DISTANCE_TOLERANCE_CM = 2.0


class OutOfRange(CivicbinError):
    code = "out_of_range"


class InvalidGeometry(CivicbinError):
    code = "invalid_geometry"


@dataclass(frozen=True)
class UltrasonicReading:
    """Echo distance from the sensor face down to the waste surface."""

    distance_cm: float
    measured_at: int
    seq: int

    def __post_init__(self):
        if not (math.isfinite(self.distance_cm) and self.distance_cm >= 0):
            raise InvalidConfig("distance_cm", f"must be finite and >= 0, got {self.distance_cm!r}")


@dataclass(frozen=True)
class StationObservation:
    """Synthetic per-image observation from a station camera."""

    station_id: str
    captured_at: int
    is_night: bool
    light_on: bool
    fill_estimate: float
    spillage_seen: bool

    def __post_init__(self):
        if not (math.isfinite(self.fill_estimate) and 0.0 <= self.fill_estimate <= 1.2):
            raise InvalidConfig("fill_estimate", f"must be in [0, 1.2], got {self.fill_estimate!r}")


def fill_fraction(reading: UltrasonicReading, geometry: BinGeometry) -> float:
    """Convert an echo distance to a fill fraction in [0, 1].

    The sensor sits ``sensor_offset_cm`` above the max-fill line, so an empty
    bin echoes at offset + depth and a full one at offset. Readings slightly
    outside that span are clamped; beyond ``DISTANCE_TOLERANCE_CM`` they are
    faults and raise ``OutOfRange``.
    """
    depth = geometry.depth_cm
    offset = geometry.sensor_offset_cm
    if depth <= 0:
        raise InvalidGeometry(f"depth_cm must be positive, got {depth!r}")
    d = reading.distance_cm
    if d < offset - DISTANCE_TOLERANCE_CM or d > offset + depth + DISTANCE_TOLERANCE_CM:
        raise OutOfRange(
            f"distance {d} cm outside [{offset - DISTANCE_TOLERANCE_CM}, "
            f"{offset + depth + DISTANCE_TOLERANCE_CM}] for this geometry"
        )
    return min(1.0, max(0.0, (offset + depth - d) / depth))


def distance_for_fill(fill: float, geometry: BinGeometry) -> float:
    """Inverse of ``fill_fraction`` on the valid window (used by simulators)."""
    return geometry.sensor_offset_cm + geometry.depth_cm * (1.0 - fill)


def led_state(fill: float, t: Thresholds) -> LedColor:
    """LED color law: Green up to the yellow mark, Red at and past the red mark.

    The yellow boundary is strict: a bin at exactly ``yellow_at`` still shows
    Green ("above" the mark turns it Yellow).
    """
    if fill >= t.red_at:
        return LedColor.RED
    if fill > t.yellow_at:
        return LedColor.YELLOW
    return LedColor.GREEN


def heat_flag(inner_temp_c: float, ambient_temp_c: float, t: Thresholds) -> HeatFlag:
    """Inner-vs-ambient delta heuristic for the waste type hint."""
    delta = inner_temp_c - ambient_temp_c
    if delta >= t.heat_anomaly_delta_c:
        return HeatFlag.ANOMALY
    if delta >= t.heat_organic_delta_c:
        return HeatFlag.ORGANIC_SUSPECTED
    return HeatFlag.NORMAL


def classify_station_observation(obs: StationObservation, t: Thresholds) -> StationStatus:
    """Decide a station's status from one camera observation.

    A night capture without the solar light is unusable and classifies as
    Indeterminate; daytime (or lit) captures always resolve to one of
    Empty/Full/Overflow. Visible spillage is an overflow witness regardless
    of the fill estimate.
    """
    if obs.is_night and not obs.light_on:
        return StationStatus.INDETERMINATE
    if obs.spillage_seen or obs.fill_estimate >= t.overflow_at:
        return StationStatus.OVERFLOW
    if obs.fill_estimate >= t.red_at:
        return StationStatus.FULL
    return StationStatus.EMPTY
