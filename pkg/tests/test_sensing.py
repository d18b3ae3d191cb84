import pytest
from hypothesis import given, strategies as st

from civicbin.domain import BinGeometry, HeatFlag, LedColor, StationStatus, Thresholds
from civicbin.sensing import (
    OutOfRange,
    StationObservation,
    UltrasonicReading,
    classify_station_observation,
    distance_for_fill,
    fill_fraction,
    heat_flag,
    led_state,
)

T = Thresholds()


def reading(distance_cm, seq=0):
    return UltrasonicReading(distance_cm=distance_cm, measured_at=0, seq=seq)


def test_fill_fraction_surface_at_bottom():
    g = BinGeometry(depth_cm=100, sensor_offset_cm=5)
    assert fill_fraction(reading(105), g) == 0.0


def test_fill_fraction_surface_at_max_fill_line():
    g = BinGeometry(depth_cm=100, sensor_offset_cm=5)
    assert fill_fraction(reading(5), g) == 1.0


def test_fill_fraction_midway():
    # (5 + 100 - 55) / 100 = 0.5
    g = BinGeometry(depth_cm=100, sensor_offset_cm=5)
    assert fill_fraction(reading(55), g) == 0.5


def test_fill_fraction_clamps_jitter_within_tolerance():
    g = BinGeometry(depth_cm=100, sensor_offset_cm=5)
    assert fill_fraction(reading(4.0), g) == 1.0   # 1 cm past the max-fill line
    assert fill_fraction(reading(106.5), g) == 0.0  # 1.5 cm past the bottom


def test_fill_fraction_faults_outside_tolerance():
    g = BinGeometry(depth_cm=100, sensor_offset_cm=5)
    with pytest.raises(OutOfRange):
        fill_fraction(reading(2.9), g)
    with pytest.raises(OutOfRange):
        fill_fraction(reading(107.1), g)


geometries = st.builds(
    BinGeometry,
    depth_cm=st.floats(min_value=10.0, max_value=500.0, allow_nan=False),
    sensor_offset_cm=st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
)


@given(geometries, st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_fill_fraction_roundtrip(g, f):
    assert abs(fill_fraction(reading(distance_for_fill(f, g)), g) - f) < 1e-9


@given(
    geometries,
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_fill_fraction_monotone_nonincreasing_in_distance(g, a, b):
    lo, hi = sorted((a, b))
    d_lo = g.sensor_offset_cm + lo * g.depth_cm
    d_hi = g.sensor_offset_cm + hi * g.depth_cm
    assert fill_fraction(reading(d_lo), g) >= fill_fraction(reading(d_hi), g)


def led_oracle(fill, t):
    # Independent piecewise restatement of the LED law.
    if fill <= t.yellow_at:
        return LedColor.GREEN
    if fill < t.red_at:
        return LedColor.YELLOW
    return LedColor.RED


def test_led_state_examples():
    assert led_state(0.0, T) == LedColor.GREEN
    assert led_state(0.55, T) == LedColor.YELLOW
    assert led_state(0.95, T) == LedColor.RED


def test_led_state_boundaries_strict_yellow_inclusive_red():
    assert led_state(0.5, T) == LedColor.GREEN  # exactly at the mark stays Green
    assert led_state(0.9, T) == LedColor.RED    # red mark is inclusive


def test_led_state_grid_matches_piecewise_oracle():
    n = 10_000
    for i in range(n + 1):
        fill = i / n
        assert led_state(fill, T) == led_oracle(fill, T), fill


def test_led_state_partitions_into_three_contiguous_intervals():
    n = 10_000
    colors = [led_state(i / n, T) for i in range(n + 1)]
    # Once the color changes it never goes back: exactly two boundaries.
    changes = sum(1 for a, b in zip(colors, colors[1:]) if a != b)
    assert changes == 2
    assert colors[0] == LedColor.GREEN and colors[-1] == LedColor.RED


def test_heat_flag_levels():
    assert heat_flag(25, 25, T) == HeatFlag.NORMAL
    assert heat_flag(31, 25, T) == HeatFlag.ORGANIC_SUSPECTED
    assert heat_flag(60, 25, T) == HeatFlag.ANOMALY


def test_heat_flag_boundary_inclusive():
    assert heat_flag(30, 25, T) == HeatFlag.ORGANIC_SUSPECTED
    assert heat_flag(55, 25, T) == HeatFlag.ANOMALY


def obs(**kw):
    base = dict(
        station_id="S1",
        captured_at=0,
        is_night=False,
        light_on=False,
        fill_estimate=0.0,
        spillage_seen=False,
    )
    base.update(kw)
    return StationObservation(**base)


def test_classify_daytime_full():
    assert classify_station_observation(obs(fill_estimate=0.95), T) == StationStatus.FULL


def test_classify_night_without_light_is_indeterminate():
    o = obs(is_night=True, light_on=False, fill_estimate=1.1)
    assert classify_station_observation(o, T) == StationStatus.INDETERMINATE


def test_classify_night_with_light_is_usable():
    o = obs(is_night=True, light_on=True, fill_estimate=0.95)
    assert classify_station_observation(o, T) == StationStatus.FULL


def test_classify_spillage_is_overflow_witness():
    assert classify_station_observation(obs(spillage_seen=True), T) == StationStatus.OVERFLOW


def test_classify_fill_at_overflow_threshold():
    assert classify_station_observation(obs(fill_estimate=1.0), T) == StationStatus.OVERFLOW


def test_classify_daytime_low_fill_is_empty():
    assert classify_station_observation(obs(fill_estimate=0.3), T) == StationStatus.EMPTY


@given(
    st.floats(min_value=0.0, max_value=1.2, allow_nan=False),
    st.booleans(),
    st.booleans(),
)
def test_classify_never_indeterminate_by_day(fill_estimate, light_on, spillage):
    o = obs(is_night=False, light_on=light_on, fill_estimate=fill_estimate, spillage_seen=spillage)
    assert classify_station_observation(o, T) != StationStatus.INDETERMINATE
