"""Rebuild per-session timelines from raw event streams.

A session is the logging epoch of one browser window: it opens with event 200
and closes with 201 (or with nothing, when the closing cascade was lost).
Reconstruction turns the session's events into half-open intervals:

    loaded      per load_id, from 400/410 pairs
    visible     per focus_id, from 420/430 pairs, attached to the load that
                occupied the tab at the time
    background  per window, from 150/151 pairs at least `debounce_ms` long;
                shorter focus losses are treated as moves/resizes and erased
    inactive    explicit, from 210/211; the 210 fires one minute after the
                last user action, so its interval is backdated by that minute
    implicit    gaps between consecutive events longer than `idle_gap_ms`

Anomalies (orphan closes, duplicate ids, non-alternating streams) never abort
reconstruction; they are collected so data-quality problems stay visible.

Same-millisecond events are ordered semantically (closes before opens, hides
before shows, session bracket outermost) before any pairing; see
events.order_events.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from . import events as ev
from .intervals import Interval, clamp, normalize, subtract, total_length
from .urls import UrlDigest

DEBOUNCE_MS = 10_000
IDLE_GAP_MS = 60_000
IDLE_BACKDATE_MS = 60_000

IMPUTE_FILTER = "filter"
IMPUTE_ESTIMATE = "estimate"

END_RECORDED = "recorded"
END_IMPUTED = "imputed"
END_EXCLUDED = "excluded"

CLOSED_BY_EVENT = "event"
CLOSED_BY_SESSION_END = "session-end"


class NoSessionStart(ValueError):
    """The stream has no 200 event; the session cannot be reconstructed."""


@dataclass(frozen=True)
class ReconstructionOptions:
    debounce_ms: int = DEBOUNCE_MS
    idle_gap_ms: int = IDLE_GAP_MS
    backdate_ms: int = IDLE_BACKDATE_MS
    impute: str = IMPUTE_ESTIMATE
    impute_offset_ms: int = 0


@dataclass(frozen=True, slots=True)
class Anomaly:
    kind: str
    time: int
    detail: str


@dataclass
class LoadTimeline:
    load_id: int
    window_id: int
    tab_id: int
    url: UrlDigest | None
    cause: int | None
    start: int
    end: int | None = None
    closed_by: str = CLOSED_BY_EVENT
    visible: list[Interval] = field(default_factory=list)

    @property
    def interval(self) -> Interval:
        assert self.end is not None
        return Interval(self.start, self.end)


@dataclass
class FocusTimeline:
    focus_id: int
    window_id: int
    tab_id: int
    load_id: int | None
    cause: int | None
    start: int
    end: int | None = None
    closed_by: str = CLOSED_BY_EVENT

    @property
    def interval(self) -> Interval:
        assert self.end is not None
        return Interval(self.start, self.end)


@dataclass
class WindowTimeline:
    window_id: int
    open_spans: list[Interval] = field(default_factory=list)
    focused: list[Interval] = field(default_factory=list)
    background: list[Interval] = field(default_factory=list)
    minimized: list[Interval] = field(default_factory=list)


@dataclass
class SessionTimeline:
    """Reconstructed view of one session, or of several merged sessions."""

    user_id: int
    session_ids: tuple[int, ...]
    start: int
    end: int
    end_sources: dict[int, str]
    spans: list[Interval]
    loads: dict[int, LoadTimeline]
    focuses: dict[int, FocusTimeline]
    windows: dict[int, WindowTimeline]
    inactive: list[Interval]
    active: list[Interval]
    implicit_inactive: list[Interval]
    window_deltas: list[tuple[int, int]]
    tab_deltas: list[tuple[int, int]]
    anomalies: list[Anomaly]
    start_marker: int | None = None   # 221/231 when the session began by resuming
    end_marker: int | None = None     # 220/230 when the session ended by suspending
    private_gaps: list[Interval] = field(default_factory=list)
    logging_off_gaps: list[Interval] = field(default_factory=list)

    @property
    def duration(self) -> int:
        return total_length(self.spans)


def impute_session_end(records: list[ev.EventRecord], strategy: str = IMPUTE_ESTIMATE,
                       offset_ms: int = 0) -> tuple[int | None, str]:
    """Resolve the session end time for one session's event stream.

    Returns (end, source): a recorded 201 wins; otherwise `estimate` uses the
    last recorded event time plus the offset, and `filter` marks the session
    excluded (end None) so it is dropped from analytics.
    """
    if strategy not in (IMPUTE_FILTER, IMPUTE_ESTIMATE):
        raise ValueError(f"unknown imputation strategy {strategy!r}")
    if not any(r.event_id == ev.EV_SESSION_START for r in records):
        raise NoSessionStart("no session start (200) event in stream")
    ends = [r.core.time for r in records if r.event_id == ev.EV_SESSION_END]
    if ends:
        return max(ends), END_RECORDED
    if strategy == IMPUTE_FILTER:
        return None, END_EXCLUDED
    last = max(r.core.time for r in records)
    return last + offset_ms, END_IMPUTED


def pair_intervals(records: list[ev.EventRecord], session_end: int | None = None):
    """Pair 400/410 into load intervals and 420/430 into visible intervals.

    Visible intervals are attached to the load occupying their tab at open
    time. With `session_end` given, unpaired intervals are closed there and
    flagged; otherwise they keep end=None.

    Returns (loads, focuses, anomalies).
    """
    loads: dict[int, LoadTimeline] = {}
    focuses: dict[int, FocusTimeline] = {}
    anomalies: list[Anomaly] = []
    current_load: dict[tuple[int, int], int | None] = defaultdict(lambda: None)

    for record in ev.order_events(records):
        if not isinstance(record, ev.BrowsingEvent):
            continue
        core = record.core
        tab_key = (core.window_id, core.tab_id)
        if record.event_id == ev.EV_PAGE_LOADED:
            assert record.load_id is not None
            if record.load_id in loads:
                anomalies.append(Anomaly("duplicate-load-id", core.time,
                                         f"load_id {record.load_id} loaded twice; duplicate ignored"))
                continue
            loads[record.load_id] = LoadTimeline(
                load_id=record.load_id, window_id=core.window_id, tab_id=core.tab_id,
                url=record.url, cause=record.cause, start=core.time,
            )
            current_load[tab_key] = record.load_id
        elif record.event_id == ev.EV_PAGE_UNLOADED:
            assert record.load_id is not None
            load = loads.get(record.load_id)
            if load is None or load.end is not None:
                anomalies.append(Anomaly("orphan-unload", core.time,
                                         f"unload for unknown or closed load_id {record.load_id}"))
                continue
            load.end = core.time
            if current_load[tab_key] == record.load_id:
                current_load[tab_key] = None
        elif record.event_id == ev.EV_PAGE_VISIBLE:
            assert record.focus_id is not None
            if record.focus_id in focuses:
                anomalies.append(Anomaly("duplicate-focus-id", core.time,
                                         f"focus_id {record.focus_id} opened twice; duplicate ignored"))
                continue
            attached = current_load[tab_key]
            if attached is None:
                anomalies.append(Anomaly("visibility-without-load", core.time,
                                         f"focus_id {record.focus_id} in tab with no known load"))
            focuses[record.focus_id] = FocusTimeline(
                focus_id=record.focus_id, window_id=core.window_id, tab_id=core.tab_id,
                load_id=attached, cause=record.cause, start=core.time,
            )
        elif record.event_id == ev.EV_PAGE_HIDDEN:
            assert record.focus_id is not None
            focus = focuses.get(record.focus_id)
            if focus is None or focus.end is not None:
                anomalies.append(Anomaly("orphan-hide", core.time,
                                         f"hide for unknown or closed focus_id {record.focus_id}"))
                continue
            focus.end = core.time

    if session_end is not None:
        for load in loads.values():
            if load.end is None:
                load.end = session_end
                load.closed_by = CLOSED_BY_SESSION_END
        for focus in focuses.values():
            if focus.end is None:
                focus.end = session_end
                focus.closed_by = CLOSED_BY_SESSION_END

    # Attach visible time to loads, clipped to the load's own interval so a
    # degraded stream cannot make a page visible longer than it was loaded.
    for focus in focuses.values():
        if focus.load_id is None or focus.end is None:
            continue
        load = loads.get(focus.load_id)
        if load is None or load.end is None:
            continue
        clipped = clamp([focus.interval], load.start, load.end)
        if clipped and clipped[0] != focus.interval:
            anomalies.append(Anomaly("visible-outside-load", focus.start,
                                     f"focus_id {focus.focus_id} clipped to its load interval"))
        load.visible.extend(clipped)
    for load in loads.values():
        load.visible = normalize(load.visible)

    return loads, focuses, anomalies


def debounce_background(records: list[ev.EventRecord], span: tuple[int, int],
                        threshold_ms: int = DEBOUNCE_MS):
    """Turn a window's 150/151 stream into background intervals.

    A focus loss produces a background interval only when focus stayed away
    for at least `threshold_ms` (inclusive boundary: a gap of exactly the
    threshold counts). Non-alternating streams are repaired by keeping the
    first of consecutive duplicates.

    Returns (background, anomalies).
    """
    background: list[Interval] = []
    anomalies: list[Anomaly] = []
    lost_at: int | None = None
    for record in ev.order_events(records):
        if record.event_id == ev.EV_FOCUS_LOST:
            if lost_at is not None:
                anomalies.append(Anomaly("focus-not-alternating", record.core.time,
                                         "consecutive focus-lost events; first kept"))
                continue
            lost_at = record.core.time
        elif record.event_id == ev.EV_FOCUS_GAINED:
            if lost_at is None:
                anomalies.append(Anomaly("focus-not-alternating", record.core.time,
                                         "focus-gained while already focused; ignored"))
                continue
            if record.core.time - lost_at >= threshold_ms:
                background.append(Interval(lost_at, record.core.time))
            lost_at = None
    if lost_at is not None and span[1] - lost_at >= threshold_ms:
        background.append(Interval(lost_at, span[1]))
    return clamp(background, *span), anomalies


def activity_intervals(records: list[ev.EventRecord], span: tuple[int, int],
                       backdate_ms: int = IDLE_BACKDATE_MS):
    """Explicit inactive/active intervals from the 210/211 stream.

    The 210 fires one minute after the last user action, so each inactive
    interval is backdated by `backdate_ms` (clamped to the session start).
    Without a closing 211 the inactivity runs to the session end; without any
    210/211 the whole session is active.

    Returns (inactive, active, anomalies).
    """
    inactive: list[Interval] = []
    anomalies: list[Anomaly] = []
    open_at: int | None = None
    for record in ev.order_events(records):
        if record.event_id == ev.EV_USER_INACTIVE:
            if open_at is not None:
                anomalies.append(Anomaly("activity-not-alternating", record.core.time,
                                         "consecutive inactive events; first kept"))
                continue
            open_at = max(span[0], record.core.time - backdate_ms)
        elif record.event_id == ev.EV_USER_ACTIVE:
            if open_at is None:
                anomalies.append(Anomaly("activity-not-alternating", record.core.time,
                                         "active event without preceding inactive; "
                                         "assuming inactive since session start"))
                open_at = span[0]
            inactive.append(Interval(open_at, record.core.time))
            open_at = None
    if open_at is not None:
        inactive.append(Interval(open_at, span[1]))
    inactive = clamp(inactive, *span)
    return inactive, subtract([span], inactive), anomalies


def implicit_idle(records: list[ev.EventRecord], gap_ms: int = IDLE_GAP_MS) -> list[Interval]:
    """Implicit inactivity from event silence.

    Every gap between consecutive events strictly longer than `gap_ms` yields
    an interval starting `gap_ms` after the earlier event. A gap of exactly
    `gap_ms` marks the onset point but carries zero time.
    """
    times = sorted(r.core.time for r in records)
    out = [Interval(a + gap_ms, b) for a, b in zip(times, times[1:]) if b - a > gap_ms]
    return normalize(out)


def _step_points(deltas: list[tuple[int, int]], anomalies: list[Anomaly] | None = None):
    """Accumulate (time, delta) pairs into a non-negative step function."""
    merged: dict[int, int] = defaultdict(int)
    for t, d in deltas:
        merged[t] += d
    points: list[tuple[int, int]] = []
    count = 0
    for t in sorted(merged):
        count += merged[t]
        if count < 0:
            if anomalies is not None:
                anomalies.append(Anomaly("negative-count", t, "more closes than opens; clamped to 0"))
            count = 0
        points.append((t, count))
    return points


def reconstruct_session(records: list[ev.EventRecord],
                        options: ReconstructionOptions = ReconstructionOptions()
                        ) -> SessionTimeline | None:
    """Reconstruct one session's timeline; None when the filter strategy
    excludes it. Raises NoSessionStart when no 200 event exists."""
    records = ev.order_events(records)
    end, end_source = impute_session_end(records, options.impute, options.impute_offset_ms)
    if end is None:
        return None
    starts = [r.core.time for r in records if r.event_id == ev.EV_SESSION_START]
    start = min(starts)
    session_id = records[0].core.session_id
    user_id = records[0].core.user_id
    span = (start, end)
    anomalies: list[Anomaly] = []

    loads, focuses, pairing_anomalies = pair_intervals(records, session_end=end)
    anomalies.extend(pairing_anomalies)

    windows: dict[int, WindowTimeline] = {}
    by_window: dict[int, list[ev.EventRecord]] = defaultdict(list)
    for record in records:
        by_window[record.core.window_id].append(record)
    for window_id, window_records in by_window.items():
        timeline = WindowTimeline(window_id=window_id, open_spans=[Interval(*span)])
        focus_stream = [r for r in window_records
                        if r.event_id in (ev.EV_FOCUS_LOST, ev.EV_FOCUS_GAINED)]
        timeline.background, bg_anomalies = debounce_background(
            focus_stream, span, options.debounce_ms)
        anomalies.extend(bg_anomalies)
        timeline.focused = subtract(timeline.open_spans, timeline.background)
        minimized: list[Interval] = []
        minimized_at: int | None = None
        for r in window_records:
            if r.event_id != ev.EV_WINDOW_STATE:
                continue
            state = getattr(r, "window_state", None)
            if state == ev.STATE_MINIMIZED and minimized_at is None:
                minimized_at = r.core.time
            elif state != ev.STATE_MINIMIZED and minimized_at is not None:
                minimized.append(Interval(minimized_at, r.core.time))
                minimized_at = None
        if minimized_at is not None:
            minimized.append(Interval(minimized_at, end))
        timeline.minimized = clamp(minimized, *span)
        windows[window_id] = timeline

    inactive, active, activity_anomalies = activity_intervals(records, span, options.backdate_ms)
    anomalies.extend(activity_anomalies)

    window_deltas = [(start, 1), (end, -1)]
    tab_deltas: list[tuple[int, int]] = [(start, 1)]  # a window always has one tab
    open_tabs = 1
    for r in records:
        if r.event_id == ev.EV_TAB_OPEN:
            tab_deltas.append((r.core.time, 1))
            open_tabs += 1
        elif r.event_id == ev.EV_TAB_CLOSE:
            tab_deltas.append((r.core.time, -1))
            if open_tabs == 0:
                anomalies.append(Anomaly("negative-count", r.core.time,
                                         "tab close without matching open"))
            else:
                open_tabs -= 1
    if open_tabs:
        tab_deltas.append((end, -open_tabs))

    start_marker = next((r.event_id for r in records
                         if r.event_id in (ev.EV_LOGGING_ON, ev.EV_PRIVATE_OFF)
                         and r.core.time == start), None)
    end_marker = next((r.event_id for r in records
                       if r.event_id in (ev.EV_LOGGING_OFF, ev.EV_PRIVATE_ON)
                       and r.core.time == end), None)

    return SessionTimeline(
        user_id=user_id,
        session_ids=(session_id,),
        start=start,
        end=end,
        end_sources={session_id: end_source},
        spans=[Interval(start, end)],
        loads=loads,
        focuses=focuses,
        windows=windows,
        inactive=inactive,
        active=active,
        implicit_inactive=implicit_idle(records, options.idle_gap_ms),
        window_deltas=window_deltas,
        tab_deltas=tab_deltas,
        anomalies=anomalies,
        start_marker=start_marker,
        end_marker=end_marker,
    )


def group_by_session(records: list[ev.EventRecord]) -> dict[int, list[ev.EventRecord]]:
    grouped: dict[int, list[ev.EventRecord]] = defaultdict(list)
    for record in records:
        grouped[record.core.session_id].append(record)
    return dict(grouped)


@dataclass
class ReconstructionReport:
    timelines: list[SessionTimeline]
    excluded_sessions: list[int]
    rejected_sessions: dict[int, str]

    @property
    def anomalies(self) -> list[Anomaly]:
        return [a for t in self.timelines for a in t.anomalies]


def reconstruct_all(records: list[ev.EventRecord],
                    options: ReconstructionOptions = ReconstructionOptions()
                    ) -> ReconstructionReport:
    """Group a mixed stream by session and reconstruct each one."""
    timelines: list[SessionTimeline] = []
    excluded: list[int] = []
    rejected: dict[int, str] = {}
    for session_id, session_records in sorted(group_by_session(records).items()):
        try:
            timeline = reconstruct_session(session_records, options)
        except NoSessionStart as exc:
            rejected[session_id] = str(exc)
            continue
        if timeline is None:
            excluded.append(session_id)
        else:
            timelines.append(timeline)
    timelines.sort(key=lambda t: (t.start, t.session_ids))
    return ReconstructionReport(timelines, excluded, rejected)


def merge_timelines(timelines: list[SessionTimeline]) -> SessionTimeline:
    """Merge one user's session timelines into a single cross-session view.

    Spans, activity, and step deltas are unioned/concatenated; windows merge
    by window_id. Gaps between a suspend-terminated session and the matching
    resume of the same window become private-browsing / logging-off gap
    intervals (informational: they lie outside every span, so no ratio
    denominator ever includes them).
    """
    if not timelines:
        raise ValueError("nothing to merge")
    user_ids = {t.user_id for t in timelines}
    if len(user_ids) > 1:
        raise ValueError(f"refusing to merge timelines of different users: {sorted(user_ids)}")

    windows: dict[int, WindowTimeline] = {}
    loads: dict[int, LoadTimeline] = {}
    focuses: dict[int, FocusTimeline] = {}
    end_sources: dict[int, str] = {}
    spans: list[Interval] = []
    inactive: list[Interval] = []
    window_deltas: list[tuple[int, int]] = []
    tab_deltas: list[tuple[int, int]] = []
    implicit: list[Interval] = []
    anomalies: list[Anomaly] = []
    private_gaps: list[Interval] = []
    logging_off_gaps: list[Interval] = []

    for t in timelines:
        spans.extend(t.spans)
        inactive.extend(t.inactive)
        implicit.extend(t.implicit_inactive)
        window_deltas.extend(t.window_deltas)
        tab_deltas.extend(t.tab_deltas)
        anomalies.extend(t.anomalies)
        loads.update(t.loads)
        focuses.update(t.focuses)
        end_sources.update(t.end_sources)
        private_gaps.extend(t.private_gaps)
        logging_off_gaps.extend(t.logging_off_gaps)
        for window_id, wt in t.windows.items():
            merged = windows.setdefault(window_id, WindowTimeline(window_id=window_id))
            merged.open_spans.extend(wt.open_spans)
            merged.focused.extend(wt.focused)
            merged.background.extend(wt.background)
            merged.minimized.extend(wt.minimized)

    for merged in windows.values():
        merged.open_spans = normalize(merged.open_spans)
        merged.focused = normalize(merged.focused)
        merged.background = normalize(merged.background)
        merged.minimized = normalize(merged.minimized)

    # Suspension gaps: same window, session ending with 220/230 followed by
    # one starting with the matching 221/231.
    per_window: dict[int, list[SessionTimeline]] = defaultdict(list)
    for t in timelines:
        for window_id in t.windows:
            per_window[window_id].append(t)
    for sessions in per_window.values():
        sessions.sort(key=lambda t: t.start)
        for prev, nxt in zip(sessions, sessions[1:]):
            if nxt.start <= prev.end:
                continue
            gap = Interval(prev.end, nxt.start)
            if prev.end_marker == ev.EV_PRIVATE_ON and nxt.start_marker == ev.EV_PRIVATE_OFF:
                private_gaps.append(gap)
            elif prev.end_marker == ev.EV_LOGGING_OFF and nxt.start_marker == ev.EV_LOGGING_ON:
                logging_off_gaps.append(gap)

    spans = normalize(spans)
    inactive = normalize(inactive)
    return SessionTimeline(
        user_id=timelines[0].user_id,
        session_ids=tuple(sid for t in timelines for sid in t.session_ids),
        start=min(t.start for t in timelines),
        end=max(t.end for t in timelines),
        end_sources=end_sources,
        spans=spans,
        loads=loads,
        focuses=focuses,
        windows=windows,
        inactive=inactive,
        active=subtract(spans, inactive),
        implicit_inactive=normalize(implicit),
        window_deltas=sorted(window_deltas),
        tab_deltas=sorted(tab_deltas),
        anomalies=anomalies,
        private_gaps=normalize(private_gaps),
        logging_off_gaps=normalize(logging_off_gaps),
    )


@dataclass(frozen=True)
class ConcurrencyProfile:
    """Open-window and open-tab step functions over a user's observed time."""

    window_points: tuple[tuple[int, int], ...]
    tab_points: tuple[tuple[int, int], ...]
    spans: tuple[Interval, ...]
    anomalies: tuple[Anomaly, ...] = ()


def concurrency_profile(timelines: list[SessionTimeline]) -> ConcurrencyProfile:
    """Step functions of open windows/tabs across overlapping sessions.

    Counts rise at opens and fall at closes; a session end (recorded or
    imputed) closes its window and all of that window's open tabs.
    """
    anomalies: list[Anomaly] = []
    window_deltas: list[tuple[int, int]] = []
    tab_deltas: list[tuple[int, int]] = []
    spans: list[Interval] = []
    for t in timelines:
        window_deltas.extend(t.window_deltas)
        tab_deltas.extend(t.tab_deltas)
        spans.extend(t.spans)
    return ConcurrencyProfile(
        window_points=tuple(_step_points(window_deltas, anomalies)),
        tab_points=tuple(_step_points(tab_deltas, anomalies)),
        spans=tuple(normalize(spans)),
        anomalies=tuple(anomalies),
    )
