import re

import pytest
from hypothesis import given, strategies as st

from civicbin.domain import (
    COMPLAINT_EVENTS,
    Channel,
    ComplaintState,
    GeoPoint,
    BinGeometry,
    InvalidConfig,
    InvalidTransition,
    NidFormatError,
    Notification,
    Thresholds,
    Zone,
    complaint_transition,
    nid_is_valid,
    validate_nid,
)

NID_ORACLE = re.compile(r"^(?:[0-9]{10}|[0-9]{13}|[0-9]{17})$")


def test_validate_nid_accepts_10_digits():
    validate_nid("1234567890")


def test_validate_nid_rejects_non_digit():
    with pytest.raises(NidFormatError, match="non-digit"):
        validate_nid("12345abc90")


def test_validate_nid_rejects_bad_length():
    with pytest.raises(NidFormatError, match="length 9"):
        validate_nid("123456789")


@pytest.mark.parametrize("length", [10, 13, 17])
def test_validate_nid_accepts_all_allowed_lengths(length):
    validate_nid("9" * length)


def test_validate_nid_rejects_unicode_digits():
    # isdigit() alone would accept these; the rule is ASCII digits only.
    assert not nid_is_valid("१" * 10)


@given(st.text(alphabet=st.characters(min_codepoint=48, max_codepoint=57), max_size=20))
def test_nid_matches_regex_oracle_on_digit_strings(s):
    assert nid_is_valid(s) == bool(NID_ORACLE.fullmatch(s))


@given(st.text(max_size=20))
def test_nid_matches_regex_oracle_on_arbitrary_text(s):
    assert nid_is_valid(s) == bool(NID_ORACLE.fullmatch(s))


LEGAL = {
    (ComplaintState.SUBMITTED, "dispatch"): ComplaintState.DISPATCHED,
    (ComplaintState.DISPATCHED, "resolve"): ComplaintState.RESOLVED,
    (ComplaintState.RESOLVED, "acknowledge"): ComplaintState.ACKNOWLEDGED,
}


def test_complaint_transition_matrix_exhaustive():
    # Total function on 4 states x 3 events; exactly the 3 chain links are legal.
    legal_seen = 0
    for state in ComplaintState:
        for event in COMPLAINT_EVENTS:
            if (state, event) in LEGAL:
                assert complaint_transition(state, event) == LEGAL[(state, event)]
                legal_seen += 1
            else:
                with pytest.raises(InvalidTransition) as err:
                    complaint_transition(state, event)
                assert err.value.state == state
                assert err.value.event == event
    assert legal_seen == 3


def test_complaint_transition_rejects_unknown_event():
    with pytest.raises(InvalidTransition):
        complaint_transition(ComplaintState.SUBMITTED, "escalate")


def test_thresholds_defaults_valid():
    t = Thresholds()
    assert t.yellow_at == 0.5
    assert t.red_at == 0.9
    assert t.sla_ms == 3 * 3_600_000


@pytest.mark.parametrize(
    "kwargs",
    [
        {"yellow_at": 0.9, "red_at": 0.5},
        {"yellow_at": 0.5, "red_at": 0.5},
        {"red_at": 1.1, "overflow_at": 1.0},
        {"yellow_at": 0.0},
        {"poll_interval_s": 0},
        {"sla_hours": 0},
    ],
)
def test_thresholds_rejects_bad_ordering(kwargs):
    with pytest.raises(InvalidConfig):
        Thresholds(**kwargs)


def test_thresholds_roundtrip_dict():
    t = Thresholds(yellow_at=0.4, red_at=0.8)
    assert Thresholds.from_dict(t.as_dict()) == t


def test_thresholds_from_dict_rejects_unknown_field():
    with pytest.raises(InvalidConfig):
        Thresholds.from_dict({"yelow_at": 0.4})


@pytest.mark.parametrize("lat,lon", [(91, 0), (-91, 0), (0, 181), (0, -181), (float("nan"), 0)])
def test_geopoint_rejects_out_of_range(lat, lon):
    with pytest.raises(InvalidConfig):
        GeoPoint(lat, lon)


def test_bin_geometry_rejects_nonpositive_depth():
    with pytest.raises(InvalidConfig):
        BinGeometry(depth_cm=0, sensor_offset_cm=2)
    with pytest.raises(InvalidConfig):
        BinGeometry(depth_cm=10, sensor_offset_cm=-1)


def test_zone_requires_positive_poll_interval():
    with pytest.raises(InvalidConfig):
        Zone("Z1", wifi_available=True, wifi_outage=False, poll_interval_s=0)


def test_sms_notification_requires_address_text():
    with pytest.raises(InvalidConfig):
        Notification(
            notification_id="NTF-1",
            channel=Channel.SMS,
            recipient="C1",
            body="full bin",
            geo=GeoPoint(22.8, 89.5),
            address_text=None,
            queued_at=0,
        )
