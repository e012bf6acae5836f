import pytest

from browsetel import events as ev
from browsetel import reconstruct as rec
from browsetel.intervals import Interval

from conftest import browsing_event, session_event, window_event


def _session(events, start=0, end=None, session_id=13):
    """Wrap payload events in a 200/201 bracket."""
    records = [session_event(ev.EV_SESSION_START, time=start, session_id=session_id)]
    records += events
    if end is not None:
        records.append(session_event(ev.EV_SESSION_END, time=end, session_id=session_id))
    return records


class TestPairIntervals:
    def test_load_unload_pairing(self):
        records = [
            browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10),
            browsing_event(ev.EV_PAGE_UNLOADED, load_id=5, url=None, time=70),
        ]
        loads, _, anomalies = rec.pair_intervals(records)
        assert loads[5].interval == Interval(10, 70)
        assert loads[5].closed_by == rec.CLOSED_BY_EVENT
        assert anomalies == []

    def test_two_visible_intervals(self):
        records = [
            browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=5),
            browsing_event(ev.EV_PAGE_VISIBLE, focus_id=1, cause=10, url=None, time=10),
            browsing_event(ev.EV_PAGE_HIDDEN, focus_id=1, url=None, time=25),
            browsing_event(ev.EV_PAGE_VISIBLE, focus_id=2, cause=11, url=None, time=40),
            browsing_event(ev.EV_PAGE_HIDDEN, focus_id=2, url=None, time=55),
        ]
        _, focuses, _ = rec.pair_intervals(records)
        assert focuses[1].interval == Interval(10, 25)
        assert focuses[2].interval == Interval(40, 55)
        assert focuses[1].interval.length == focuses[2].interval.length == 15

    def test_missing_unload_closed_at_session_end(self):
        records = [browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10)]
        loads, _, _ = rec.pair_intervals(records, session_end=100)
        assert loads[5].interval == Interval(10, 100)
        assert loads[5].closed_by == rec.CLOSED_BY_SESSION_END

    def test_orphan_unload_is_anomaly_not_fatal(self):
        records = [browsing_event(ev.EV_PAGE_UNLOADED, load_id=9, url=None, time=10)]
        loads, _, anomalies = rec.pair_intervals(records)
        assert loads == {}
        assert [a.kind for a in anomalies] == ["orphan-unload"]

    def test_duplicate_load_id_is_anomaly(self):
        records = [
            browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10),
            browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=20),
        ]
        loads, _, anomalies = rec.pair_intervals(records)
        assert loads[5].start == 10
        assert [a.kind for a in anomalies] == ["duplicate-load-id"]

    def test_visible_attached_to_tab_load(self):
        records = [
            browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10, tab_id=1),
            browsing_event(ev.EV_PAGE_VISIBLE, focus_id=1, cause=10, url=None, time=10, tab_id=1),
            browsing_event(ev.EV_PAGE_HIDDEN, focus_id=1, url=None, time=30, tab_id=1),
            browsing_event(ev.EV_PAGE_UNLOADED, load_id=5, url=None, time=40, tab_id=1),
        ]
        loads, focuses, _ = rec.pair_intervals(records)
        assert focuses[1].load_id == 5
        assert loads[5].visible == [Interval(10, 30)]


class TestDebounceBackground:
    def _focus_gap(self, gap_ms, threshold_ms=rec.DEBOUNCE_MS):
        records = [
            window_event(ev.EV_FOCUS_LOST, time=1_000),
            window_event(ev.EV_FOCUS_GAINED, time=1_000 + gap_ms),
        ]
        background, anomalies = rec.debounce_background(records, (0, 100_000), threshold_ms)
        assert anomalies == []
        return background

    def test_four_second_gap_erased(self):
        assert self._focus_gap(4_000) == []

    def test_sixty_second_gap_kept(self):
        assert self._focus_gap(60_000) == [Interval(1_000, 61_000)]

    def test_exact_threshold_inclusive(self):
        assert self._focus_gap(10_000) == [Interval(1_000, 11_000)]
        assert self._focus_gap(9_999) == []

    def test_zero_threshold_reproduces_raw_gaps(self):
        assert self._focus_gap(4_000, threshold_ms=0) == [Interval(1_000, 5_000)]

    def test_open_loss_runs_to_session_end(self):
        records = [window_event(ev.EV_FOCUS_LOST, time=80_000)]
        background, _ = rec.debounce_background(records, (0, 100_000), rec.DEBOUNCE_MS)
        assert background == [Interval(80_000, 100_000)]

    def test_non_alternating_repaired(self):
        records = [
            window_event(ev.EV_FOCUS_LOST, time=1_000),
            window_event(ev.EV_FOCUS_LOST, time=2_000),
            window_event(ev.EV_FOCUS_GAINED, time=30_000),
        ]
        background, anomalies = rec.debounce_background(records, (0, 100_000), rec.DEBOUNCE_MS)
        assert background == [Interval(1_000, 30_000)]  # first loss kept
        assert [a.kind for a in anomalies] == ["focus-not-alternating"]


class TestActivityIntervals:
    def test_backdate_arithmetic(self):
        records = [
            session_event(ev.EV_USER_INACTIVE, time=120_000),
            session_event(ev.EV_USER_ACTIVE, time=300_000),
        ]
        inactive, active, _ = rec.activity_intervals(records, (0, 400_000))
        assert inactive == [Interval(60_000, 300_000)]
        assert active == [Interval(0, 60_000), Interval(300_000, 400_000)]

    def test_no_events_whole_session_active(self):
        inactive, active, _ = rec.activity_intervals([], (0, 1_000))
        assert inactive == []
        assert active == [Interval(0, 1_000)]

    def test_inactive_until_session_end(self):
        records = [session_event(ev.EV_USER_INACTIVE, time=120_000)]
        inactive, _, _ = rec.activity_intervals(records, (0, 200_000))
        assert inactive == [Interval(60_000, 200_000)]

    def test_backdate_clamped_to_session_start(self):
        records = [session_event(ev.EV_USER_INACTIVE, time=30_000),
                   session_event(ev.EV_USER_ACTIVE, time=90_000)]
        inactive, _, _ = rec.activity_intervals(records, (0, 100_000))
        assert inactive == [Interval(0, 90_000)]

    def test_overlapping_backdated_intervals_merge(self):
        # active blip at 12_300 detected at 15_000; next 210 backdates to 12_300
        records = [
            session_event(ev.EV_USER_INACTIVE, time=10_000),
            session_event(ev.EV_USER_ACTIVE, time=15_000),
            session_event(ev.EV_USER_INACTIVE, time=72_300),
            session_event(ev.EV_USER_ACTIVE, time=100_000),
        ]
        inactive, _, _ = rec.activity_intervals(records, (0, 200_000), backdate_ms=60_000)
        assert inactive == [Interval(0, 100_000)]


class TestImplicitIdle:
    def test_long_gap(self):
        records = [session_event(ev.EV_SESSION_START, time=0),
                   browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=300_000)]
        assert rec.implicit_idle(records) == [Interval(60_000, 300_000)]
        assert rec.implicit_idle(records)[0].length == 240_000

    def test_frequent_events_no_idle(self):
        records = [session_event(ev.EV_SESSION_START, time=i * 30_000) for i in range(10)]
        assert rec.implicit_idle(records) == []

    def test_single_event_no_idle(self):
        assert rec.implicit_idle([session_event(ev.EV_SESSION_START, time=5)]) == []

    def test_exact_gap_carries_zero_time(self):
        records = [session_event(ev.EV_SESSION_START, time=0),
                   session_event(ev.EV_SESSION_END, time=60_000)]
        assert rec.implicit_idle(records) == []
        records[1] = session_event(ev.EV_SESSION_END, time=60_001)
        assert rec.implicit_idle(records) == [Interval(60_000, 60_001)]


class TestImputeSessionEnd:
    def test_recorded_end_wins(self):
        records = _session([], start=0, end=500)
        assert rec.impute_session_end(records) == (500, rec.END_RECORDED)

    def test_estimate_uses_last_event(self):
        records = _session([browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=480)])
        assert rec.impute_session_end(records, rec.IMPUTE_ESTIMATE, 0) == (480, rec.END_IMPUTED)
        assert rec.impute_session_end(records, rec.IMPUTE_ESTIMATE, 2_000) == (2_480, rec.END_IMPUTED)

    def test_filter_excludes(self):
        records = _session([browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=480)])
        assert rec.impute_session_end(records, rec.IMPUTE_FILTER) == (None, rec.END_EXCLUDED)

    def test_no_start_rejected(self):
        with pytest.raises(rec.NoSessionStart):
            rec.impute_session_end([browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1)])

    def test_estimate_end_not_before_any_event(self):
        records = _session([
            browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=480),
            window_event(ev.EV_FOCUS_LOST, time=700),
        ])
        end, _ = rec.impute_session_end(records, rec.IMPUTE_ESTIMATE, 0)
        assert end >= max(r.core.time for r in records)


class TestReconstructSession:
    def test_open_load_flagged_closed_by_session_end(self):
        records = _session(
            [browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10)],
            start=0, end=100)
        timeline = rec.reconstruct_session(records)
        assert timeline.loads[5].interval == Interval(10, 100)
        assert timeline.loads[5].closed_by == rec.CLOSED_BY_SESSION_END

    def test_filtered_session_returns_none(self):
        records = _session([browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=10)])
        options = rec.ReconstructionOptions(impute=rec.IMPUTE_FILTER)
        assert rec.reconstruct_session(records, options) is None

    def test_same_millisecond_ties_keep_intervals_nested(self):
        # closing cascade all at t=100: hide, unload, window close, session end
        records = [
            session_event(ev.EV_SESSION_START, time=0),
            window_event(ev.EV_WINDOW_OPEN, time=0),
            browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1, time=10, tab_id=1),
            browsing_event(ev.EV_PAGE_VISIBLE, focus_id=2, cause=10, url=None, time=10, tab_id=1),
            browsing_event(ev.EV_PAGE_HIDDEN, focus_id=2, url=None, time=100, tab_id=1),
            browsing_event(ev.EV_PAGE_UNLOADED, load_id=1, url=None, time=100, tab_id=1),
            window_event(ev.EV_WINDOW_CLOSE, time=100),
            session_event(ev.EV_SESSION_END, time=100),
        ]
        timeline = rec.reconstruct_session(records)
        assert timeline.anomalies == []
        assert timeline.loads[1].interval == Interval(10, 100)
        assert timeline.focuses[2].interval == Interval(10, 100)

    def test_minimized_intervals_from_state_events(self):
        records = _session([
            window_event(ev.EV_WINDOW_STATE, window_state=2, time=20_000),
            window_event(ev.EV_WINDOW_STATE, window_state=3, time=50_000),
        ], start=0, end=100_000)
        timeline = rec.reconstruct_session(records)
        window = timeline.windows[11]
        assert window.minimized == [Interval(20_000, 50_000)]


class TestConcurrencyProfile:
    def _timeline(self, records):
        return rec.reconstruct_session(records)

    def test_two_windows_counts_1_2_1(self):
        t1 = self._timeline(_session([], start=0, end=100, session_id=1))
        t2 = self._timeline([
            session_event(ev.EV_SESSION_START, time=50, session_id=2, window_id=12),
            session_event(ev.EV_SESSION_END, time=150, session_id=2, window_id=12),
        ])
        profile = rec.concurrency_profile([t1, t2])
        assert list(profile.window_points) == [(0, 1), (50, 2), (100, 1), (150, 0)]

    def test_tab_count_includes_initial_tab(self):
        records = _session([
            window_event(ev.EV_TAB_OPEN, tab_id=2, time=10),
            window_event(ev.EV_TAB_OPEN, tab_id=3, time=20),
            window_event(ev.EV_TAB_OPEN, tab_id=4, time=30),
            window_event(ev.EV_TAB_CLOSE, tab_id=2, time=40),
        ], start=0, end=100)
        profile = rec.concurrency_profile([self._timeline(records)])
        counts = [count for _, count in profile.tab_points]
        assert max(counts) == 4
        assert counts == [1, 2, 3, 4, 3, 0]

    def test_empty_profile(self):
        profile = rec.concurrency_profile([])
        assert profile.window_points == ()
        assert profile.spans == ()

    def test_negative_count_clamped_with_anomaly(self):
        records = _session([
            window_event(ev.EV_TAB_CLOSE, tab_id=2, time=10),
            window_event(ev.EV_TAB_CLOSE, tab_id=3, time=20),
        ], start=0, end=100)
        profile = rec.concurrency_profile([self._timeline(records)])
        assert all(count >= 0 for _, count in profile.tab_points)
        assert any(a.kind == "negative-count" for a in profile.anomalies)


class TestMergeTimelines:
    def test_suspension_gap_becomes_logging_off_interval(self):
        t1 = rec.reconstruct_session([
            session_event(ev.EV_SESSION_START, time=0, session_id=1),
            session_event(ev.EV_LOGGING_OFF, time=100, session_id=1),
            session_event(ev.EV_SESSION_END, time=100, session_id=1),
        ])
        t2 = rec.reconstruct_session([
            session_event(ev.EV_SESSION_START, time=400, session_id=2),
            session_event(ev.EV_LOGGING_ON, time=400, session_id=2),
            session_event(ev.EV_SESSION_END, time=900, session_id=2),
        ])
        merged = rec.merge_timelines([t1, t2])
        assert merged.logging_off_gaps == [Interval(100, 400)]
        assert merged.private_gaps == []
        assert merged.duration == 600  # the gap is outside every span

    def test_merge_refuses_mixed_users(self):
        t1 = rec.reconstruct_session(_session([], start=0, end=10, session_id=1))
        t2 = rec.reconstruct_session([
            session_event(ev.EV_SESSION_START, time=0, session_id=2, user_id=99),
            session_event(ev.EV_SESSION_END, time=10, session_id=2, user_id=99),
        ])
        with pytest.raises(ValueError):
            rec.merge_timelines([t1, t2])
