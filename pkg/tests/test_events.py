import json

import pytest
from hypothesis import given, strategies as st

from browsetel import events as ev
from browsetel.urls import UrlDigest

from conftest import browsing_event, make_core, session_event, window_event


def test_family_id_sets_are_disjoint():
    assert not (ev.WINDOW_EVENT_IDS & ev.SESSION_EVENT_IDS)
    assert not (ev.WINDOW_EVENT_IDS & ev.BROWSING_EVENT_IDS)
    assert not (ev.SESSION_EVENT_IDS & ev.BROWSING_EVENT_IDS)


class TestValidate:
    def test_state_change_with_state_ok(self):
        record = window_event(ev.EV_WINDOW_STATE, window_state=ev.STATE_MINIMIZED)
        assert ev.validate(record).ok

    def test_state_change_without_state_is_missing_field(self):
        record = window_event(ev.EV_WINDOW_STATE)
        assert "missing-field" in ev.validate(record).codes()

    def test_bookmark_load_ok(self):
        record = browsing_event(ev.EV_PAGE_LOADED, load_id=7, cause=ev.CAUSE_BOOKMARK)
        assert ev.validate(record).ok

    def test_load_with_visibility_cause_rejected(self):
        record = browsing_event(ev.EV_PAGE_LOADED, load_id=7, cause=10)
        assert "cause-out-of-range" in ev.validate(record).codes()

    def test_visible_with_load_cause_rejected(self):
        record = browsing_event(ev.EV_PAGE_VISIBLE, focus_id=3, cause=5, url=None)
        assert "cause-out-of-range" in ev.validate(record).codes()

    def test_unknown_event_id(self):
        record = session_event(299)
        assert "unknown-event-id" in ev.validate(record).codes()

    def test_tab_scoped_window_events(self):
        assert ev.validate(window_event(ev.EV_TAB_OPEN, tab_id=2)).ok
        assert not ev.validate(window_event(ev.EV_TAB_OPEN, tab_id=0)).ok
        assert not ev.validate(window_event(ev.EV_WINDOW_OPEN, tab_id=2)).ok

    def test_session_events_not_tab_scoped(self):
        assert not ev.validate(session_event(ev.EV_SESSION_START, tab_id=1)).ok

    def test_tz_offset_rules(self):
        assert not ev.validate(session_event(ev.EV_SESSION_START, tz_offset=7)).ok
        assert not ev.validate(session_event(ev.EV_SESSION_START, tz_offset=900)).ok
        assert ev.validate(session_event(ev.EV_SESSION_START, tz_offset=-840)).ok

    def test_zero_ids_rejected(self):
        assert not ev.validate(session_event(ev.EV_SESSION_START, user_id=0)).ok
        assert not ev.validate(session_event(ev.EV_SESSION_START, session_id=0)).ok

    def test_unload_needs_no_url_or_cause(self):
        record = browsing_event(ev.EV_PAGE_UNLOADED, load_id=7, url=None)
        assert ev.validate(record).ok
        with_url = browsing_event(ev.EV_PAGE_UNLOADED, load_id=7)
        assert "unexpected-field" in ev.validate(with_url).codes()

    def test_load_requires_url(self):
        record = browsing_event(ev.EV_PAGE_LOADED, load_id=7, cause=1, url=None)
        assert "missing-field" in ev.validate(record).codes()

    def test_url_digest_must_be_lowercase_hex(self):
        bad = UrlDigest("A" * 40, "b" * 40, "c" * 39 + "0", "d" * 40)
        record = ev.BrowsingEvent(core=make_core(tab_id=1), event_id=ev.EV_PAGE_LOADED,
                                  load_id=7, cause=1, url=bad)
        assert "value-out-of-range" in ev.validate(record).codes()


class TestCodec:
    def test_round_trip_examples(self):
        for record in (
            window_event(ev.EV_WINDOW_STATE, window_state=2),
            session_event(ev.EV_PRIVATE_ON),
            browsing_event(ev.EV_PAGE_LOADED, load_id=7, cause=3),
            browsing_event(ev.EV_PAGE_HIDDEN, focus_id=9, url=None),
        ):
            assert ev.decode(ev.encode(record)) == record

    def test_encode_rejects_invalid(self):
        with pytest.raises(ValueError):
            ev.encode(window_event(ev.EV_WINDOW_STATE))  # 140 without state

    def test_missing_time_is_malformed(self):
        payload = json.loads(ev.encode(session_event(ev.EV_SESSION_START)))
        del payload["time"]
        with pytest.raises(ev.MalformedPayload):
            ev.decode(json.dumps(payload))

    def test_unknown_event_id_raises(self):
        payload = json.loads(ev.encode(session_event(ev.EV_SESSION_START)))
        payload["event_id"] = 999
        with pytest.raises(ev.UnknownEventId):
            ev.decode(json.dumps(payload))

    def test_unknown_keys_rejected(self):
        payload = json.loads(ev.encode(session_event(ev.EV_SESSION_START)))
        payload["plaintext_url"] = "http://example.org/"
        with pytest.raises(ev.MalformedPayload):
            ev.decode(json.dumps(payload))

    def test_not_json_is_malformed(self):
        with pytest.raises(ev.MalformedPayload):
            ev.decode(b"\x00\x01binary")
        with pytest.raises(ev.MalformedPayload):
            ev.decode(b"[1,2,3]")

    def test_wire_key_order_is_canonical(self):
        record = browsing_event(ev.EV_PAGE_LOADED, load_id=7, cause=3)
        keys = list(json.loads(ev.encode(record)).keys())
        assert keys == ["time", "tz_offset", "user_id", "window_id", "session_id",
                        "tab_id", "event_id", "load_id", "cause",
                        "url_domain", "url_subdomain", "url_path", "url_full"]

    def test_bool_is_not_an_int(self):
        payload = json.loads(ev.encode(session_event(ev.EV_SESSION_START)))
        payload["tab_id"] = True
        with pytest.raises(ev.MalformedPayload):
            ev.decode(json.dumps(payload))


# --- property: random valid records round-trip bit-exactly -----------------

_ids = st.integers(min_value=1, max_value=ev.MAX_U64)
_times = st.integers(min_value=0, max_value=2**45)
_tz = st.integers(min_value=-56, max_value=56).map(lambda x: x * 15)

_cores = st.builds(
    ev.CoreAttributes, time=_times, tz_offset=_tz, user_id=_ids,
    window_id=_ids, session_id=_ids, tab_id=st.just(0),
)
_tab_cores = st.builds(
    ev.CoreAttributes, time=_times, tz_offset=_tz, user_id=_ids,
    window_id=_ids, session_id=_ids,
    tab_id=st.integers(min_value=1, max_value=ev.MAX_U32),
)
_hex40 = st.text(alphabet="0123456789abcdef", min_size=40, max_size=40)
_digests = st.builds(UrlDigest, _hex40, _hex40, _hex40, _hex40)


def _window_events():
    plain = st.builds(ev.WindowEvent, core=_cores,
                      event_id=st.sampled_from([100, 101, 150, 151]),
                      window_state=st.none())
    stateful = st.builds(ev.WindowEvent, core=_cores, event_id=st.just(140),
                         window_state=st.sampled_from(sorted(ev.WINDOW_STATES)))
    tab = st.builds(ev.WindowEvent, core=_tab_cores,
                    event_id=st.sampled_from([110, 111]), window_state=st.none())
    return st.one_of(plain, stateful, tab)


def _session_events():
    return st.builds(ev.SessionEvent, core=_cores,
                     event_id=st.sampled_from(sorted(ev.SESSION_EVENT_IDS)))


def _browsing_events():
    loaded = st.builds(ev.BrowsingEvent, core=_tab_cores, event_id=st.just(400),
                       load_id=_ids, focus_id=st.none(),
                       cause=st.integers(min_value=1, max_value=9), url=_digests)
    unloaded = st.builds(ev.BrowsingEvent, core=_tab_cores, event_id=st.just(410),
                         load_id=_ids, focus_id=st.none(), cause=st.none(), url=st.none())
    visible = st.builds(ev.BrowsingEvent, core=_tab_cores, event_id=st.just(420),
                        load_id=st.none(), focus_id=_ids,
                        cause=st.sampled_from([10, 11]), url=st.none())
    hidden = st.builds(ev.BrowsingEvent, core=_tab_cores, event_id=st.just(430),
                       load_id=st.none(), focus_id=_ids, cause=st.none(), url=st.none())
    return st.one_of(loaded, unloaded, visible, hidden)


@given(record=st.one_of(_window_events(), _session_events(), _browsing_events()))
def test_valid_records_round_trip(record):
    assert ev.validate(record).ok
    encoded = ev.encode(record)
    decoded = ev.decode(encoded)
    assert decoded == record
    assert ev.validate(decoded).ok
    assert ev.encode(decoded) == encoded
