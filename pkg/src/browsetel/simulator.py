"""Synthetic browsing behavior with exact ground truth.

A scenario is a timed list of abstract browser actions (open a window, load a
page, switch tabs, go idle...). One emulator consumes the actions and plays
the role of a correct capture add-on: it keeps the real browser trajectory,
applies the emission rules (one-minute inactivity delay, five-second activity
polling, suspend/private session splitting), and produces both the wire event
stream and the observable ground-truth intervals the stream encodes.

Emission rules, pinned here and mirrored by any conforming capture client:

  * window open: 150 for the previously focused window, then 200 and 100 at
    the same millisecond (session bracket first). A freshly opened window is
    born focused and emits no 151.
  * window close: 430 for the visible page, 410 per open page in tab order,
    101, 201; then 151 for the window inheriting desktop focus.
  * navigation: 430/410 for the replaced page, 400, then 420 (cause 10) when
    the tab is active. load_id is allocated before focus_id.
  * tab open: 110 first, then the hide of the previously visible page when
    the new tab is activated, so the originating page is still visible at
    tab-open time (navigation trees depend on this).
  * tab close: 430/410 for its page, 111, then 420 (cause 11) for the
    neighbor tab that becomes active.
  * suspend/private: 220/230 then 201 per open session, oldest window first;
    open load/visible intervals are left for the session end (no synthetic
    410s). Resume: 200 then 221/231 per window, plus a synchronizing 150 when
    the window is unfocused and a synchronizing 210 when the user is
    observably inactive at that moment.
  * inactivity: 210 exactly one minute after the last user action; 211 at the
    next five-second poll tick at or after activity resumes. Timer events
    fire before same-millisecond actions, so an idle gap of exactly one
    minute still produces the 210.
  * while logging is off or private mode is on, nothing is emitted; pages
    loaded during that time are never logged, so their later unloads and
    visibility changes are silently skipped rather than emitted as orphans.

Identifier allocation order (window then session at open; load before focus
at navigation; sessions in window-open order on resume) is part of the wire
contract for scripted scenarios, where ids are sequential from ``id_start``.
Random scenarios draw ids from the seeded generator instead.

Plaintext URLs live only in the ground truth; the stream carries digests.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import events as ev
from .intervals import Interval, normalize, subtract
from .urls import UrlDigest, UrlLevels, decompose, digest

POLL_MS = 5_000
IDLE_MS = 60_000
GT_DEBOUNCE_MS = 10_000

ACTION_OPS = frozenset({
    "window_open", "window_close", "tab_open", "tab_close", "tab_activate",
    "navigate", "focus_window", "blur_all", "window_state", "activity",
    "logging_off", "logging_on", "private_on", "private_off",
})

# Every op except these marks user activity; blurring the browser happens in
# some other application.
_NON_ACTIVITY_OPS = frozenset({"blur_all"})


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    t: int
    op: str
    window: str = ""
    tab: int = 0
    url: str = ""
    cause: int = 0
    state: int = 0
    activate: bool = False


@dataclass(frozen=True)
class FaultConfig:
    drop_session_end_prob: float = 0.0
    drop_random_event_prob: float = 0.0

    def __post_init__(self):
        for name in ("drop_session_end_prob", "drop_random_event_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {p}")


_DEFAULT_CORPUS = (
    "http://news.example.org/world/2013/story?id=1",
    "http://mail.example.org/inbox",
    "http://example.org/",
    "http://video.stream-hub.com/watch?v=42",
    "http://stream-hub.com/chart",
    "http://radio.tunes.fm/live",
    "http://wiki.reference.net/article/Tabs",
    "http://reference.net/search?q=tabs",
    "http://shop.b.co.uk/items?page=2",
    "http://b.co.uk/",
    "http://forum.community.io/thread/7",
    "http://community.io/",
)

_DEFAULT_CAUSE_WEIGHTS = (
    (ev.CAUSE_LINK, 0.43),
    (ev.CAUSE_TYPED, 0.27),
    (ev.CAUSE_BOOKMARK, 0.04),
    (ev.CAUSE_EMBED, 0.03),
    (ev.CAUSE_REDIRECT_PERMANENT, 0.05),
    (ev.CAUSE_REDIRECT_TEMPORARY, 0.05),
    (ev.CAUSE_DOWNLOAD, 0.02),
    (ev.CAUSE_FRAMED_LINK, 0.03),
    (ev.CAUSE_HISTORY, 0.08),
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs for the random behavior generator."""

    seed: int = 0
    users: int = 2
    sessions_per_user: int = 2
    session_duration_s: tuple[float, float] = (45.0, 150.0)
    action_gap_s: tuple[float, float] = (1.0, 20.0)
    idle_gap_s: tuple[float, float] = (70.0, 240.0)
    idle_prob: float = 0.2
    activity_ping_prob: float = 0.35
    extra_window_prob: float = 0.3
    navigate_weight: float = 0.4
    tab_open_weight: float = 0.15
    tab_close_weight: float = 0.07
    tab_switch_weight: float = 0.18
    window_switch_weight: float = 0.06
    focus_blip_weight: float = 0.04
    background_weight: float = 0.07
    minimize_weight: float = 0.03
    cause_weights: tuple[tuple[int, float], ...] = _DEFAULT_CAUSE_WEIGHTS
    url_corpus: tuple[str, ...] = _DEFAULT_CORPUS
    tz_offsets: tuple[int, ...] = (-120, 0, 300)
    start_time_ms: int = 1_362_000_000_000
    fault: FaultConfig = FaultConfig()

    def __post_init__(self):
        if self.users < 1 or self.sessions_per_user < 1:
            raise InvalidConfig("users and sessions_per_user must be >= 1")
        if not self.url_corpus:
            raise InvalidConfig("url_corpus must not be empty")
        if self.session_duration_s[0] <= 0 or self.session_duration_s[0] > self.session_duration_s[1]:
            raise InvalidConfig("session_duration_s must be a positive (lo, hi) range")
        if not 0.0 <= self.idle_prob <= 1.0:
            raise InvalidConfig("idle_prob must be in [0, 1]")
        if any(w < 0 for _, w in self.cause_weights) or not any(w > 0 for _, w in self.cause_weights):
            raise InvalidConfig("cause_weights need non-negative weights with positive mass")


# ---------------------------------------------------------------------------
# Ground truth: the observable trajectory, derived independently of the stream


@dataclass
class GTLoad:
    load_id: int
    tab_id: int
    url: str
    levels: UrlLevels
    digest: UrlDigest
    cause: int
    start: int
    end: int | None = None
    closed_by: str = "event"


@dataclass
class GTFocus:
    focus_id: int
    tab_id: int
    load_id: int
    cause: int
    start: int
    end: int | None = None
    closed_by: str = "event"


@dataclass
class GTSession:
    session_id: int
    window_id: int
    user_id: int
    start: int
    end: int | None = None
    end_cause: str = ""
    loads: dict[int, GTLoad] = field(default_factory=dict)
    focuses: dict[int, GTFocus] = field(default_factory=dict)
    background: list[Interval] = field(default_factory=list)
    focused: list[Interval] = field(default_factory=list)
    minimized: list[Interval] = field(default_factory=list)
    inactive: list[Interval] = field(default_factory=list)
    active: list[Interval] = field(default_factory=list)
    window_deltas: list[tuple[int, int]] = field(default_factory=list)
    tab_deltas: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class GTUser:
    user_id: int
    tz_offset: int
    sessions: dict[int, GTSession] = field(default_factory=dict)
    url_of_load: dict[int, str] = field(default_factory=dict)


@dataclass
class GroundTruth:
    users: dict[int, GTUser] = field(default_factory=dict)

    def all_sessions(self) -> list[GTSession]:
        return [s for u in self.users.values() for s in u.sessions.values()]


# ---------------------------------------------------------------------------
# Add-on emulator

_ACTIVE = "active"
_INACTIVE = "inactive"
_RESUMING = "resuming"


@dataclass
class _Load:
    load_id: int | None
    url: str
    logged_in: int | None  # session whose stream carries the 400, if any


@dataclass
class _Tab:
    tab_id: int
    load: _Load | None = None


class _Win:
    def __init__(self, key: str, window_id: int):
        self.key = key
        self.window_id = window_id
        self.session: int | None = None
        self.tab_counter = 1
        self.tabs: dict[int, _Tab] = {1: _Tab(tab_id=1)}
        self.active_tab = 1
        self.state = ev.STATE_NORMAL
        # (focus_id or None, load); None when no page is visible in the window
        self.current_focus: tuple[int | None, _Load] | None = None
        self.unfocused_since: int | None = None
        self.gt_unfocused: list[tuple[int, int]] = []  # closed real unfocused spans
        self.minimized_since: int | None = None        # observable (logged) state
        self.session_tabs = 0                          # observable open-tab count


class AddonEmulator:
    """Replays abstract browser actions as a correct capture add-on would."""

    def __init__(self, user_id: int, tz_offset: int,
                 alloc: Callable[[str], int],
                 poll_ms: int = POLL_MS, idle_ms: int = IDLE_MS):
        self.user_id = user_id
        self.tz_offset = tz_offset
        self.alloc = alloc
        self.poll_ms = poll_ms
        self.idle_ms = idle_ms
        self.events: list[ev.EventRecord] = []
        self.gt = GTUser(user_id=user_id, tz_offset=tz_offset)
        self.windows: dict[str, _Win] = {}
        self.focus_mru: list[str] = []
        self.focused: str | None = None
        self.logging_enabled = True
        self.private = False
        self.last_activity: int | None = None
        self._activity_state = _ACTIVE
        self._resume_at = 0
        self._inactive_spans: list[tuple[int, int | None]] = []
        self._last_t: int | None = None

    # -- event emission

    def _core(self, t: int, window_id: int, session_id: int, tab_id: int = 0) -> ev.CoreAttributes:
        return ev.CoreAttributes(time=t, tz_offset=self.tz_offset, user_id=self.user_id,
                                 window_id=window_id, session_id=session_id, tab_id=tab_id)

    def _emit_window(self, t: int, win: _Win, event_id: int, tab_id: int = 0,
                     window_state: int | None = None) -> None:
        assert win.session is not None
        self.events.append(ev.WindowEvent(
            core=self._core(t, win.window_id, win.session, tab_id),
            event_id=event_id, window_state=window_state))

    def _emit_session(self, t: int, win: _Win, event_id: int) -> None:
        assert win.session is not None
        self.events.append(ev.SessionEvent(
            core=self._core(t, win.window_id, win.session), event_id=event_id))

    def _emit_browsing(self, t: int, win: _Win, event_id: int, tab_id: int,
                       load_id: int | None = None, focus_id: int | None = None,
                       cause: int | None = None, url: UrlDigest | None = None) -> None:
        assert win.session is not None
        self.events.append(ev.BrowsingEvent(
            core=self._core(t, win.window_id, win.session, tab_id),
            event_id=event_id, load_id=load_id, focus_id=focus_id, cause=cause, url=url))

    # -- activity timers

    def _sessions_open(self) -> list[_Win]:
        return [w for w in self.windows.values() if w.session is not None]

    def _flush_timers(self, t: int) -> None:
        while True:
            if self._activity_state == _ACTIVE and self.last_activity is not None:
                fire = self.last_activity + self.idle_ms
                if fire <= t:
                    for win in self._sessions_open():
                        self._emit_session(fire, win, ev.EV_USER_INACTIVE)
                    self._activity_state = _INACTIVE
                    self._inactive_spans.append((self.last_activity, None))
                    continue
            elif self._activity_state == _RESUMING and self._resume_at <= t:
                for win in self._sessions_open():
                    self._emit_session(self._resume_at, win, ev.EV_USER_ACTIVE)
                start, _ = self._inactive_spans[-1]
                self._inactive_spans[-1] = (start, self._resume_at)
                self._activity_state = _ACTIVE
                continue
            break

    def _mark_activity(self, t: int) -> None:
        # update last_activity before flushing: the resume may re-arm the
        # idle timer, which must measure from this action, not the previous one
        self.last_activity = t
        if self._activity_state == _INACTIVE:
            self._activity_state = _RESUMING
            self._resume_at = -(-t // self.poll_ms) * self.poll_ms  # ceil to the poll grid
            self._flush_timers(t)

    def _observably_inactive(self) -> bool:
        return self._activity_state in (_INACTIVE, _RESUMING)

    # -- real desktop-focus trajectory bookkeeping

    def _unfocus(self, t: int, win: _Win, emit: bool) -> None:
        if win.unfocused_since is None:
            win.unfocused_since = t
            if emit and win.session is not None:
                self._emit_window(t, win, ev.EV_FOCUS_LOST)

    def _refocus(self, t: int, win: _Win, emit: bool) -> None:
        if win.unfocused_since is not None:
            win.gt_unfocused.append((win.unfocused_since, t))
            win.unfocused_since = None
            if emit and win.session is not None:
                self._emit_window(t, win, ev.EV_FOCUS_GAINED)

    # -- page visibility

    def _show(self, t: int, win: _Win, tab: _Tab, cause: int) -> None:
        assert tab.load is not None and win.current_focus is None
        load = tab.load
        if win.session is not None and load.logged_in == win.session:
            focus_id = self.alloc("focus")
            self._emit_browsing(t, win, ev.EV_PAGE_VISIBLE, tab.tab_id,
                                focus_id=focus_id, cause=cause)
            assert load.load_id is not None
            self.gt.sessions[win.session].focuses[focus_id] = GTFocus(
                focus_id=focus_id, tab_id=tab.tab_id, load_id=load.load_id,
                cause=cause, start=t)
            win.current_focus = (focus_id, load)
        else:
            win.current_focus = (None, load)

    def _hide(self, t: int, win: _Win) -> None:
        if win.current_focus is None:
            return
        focus_id, load = win.current_focus
        win.current_focus = None
        if focus_id is None or win.session is None:
            return
        tab = next((tab for tab in win.tabs.values() if tab.load is load), None)
        self._emit_browsing(t, win, ev.EV_PAGE_HIDDEN,
                            tab.tab_id if tab else 0, focus_id=focus_id)
        self.gt.sessions[win.session].focuses[focus_id].end = t

    def _unload(self, t: int, win: _Win, tab: _Tab) -> None:
        load = tab.load
        if load is None:
            return
        tab.load = None
        if win.session is not None and load.logged_in == win.session:
            assert load.load_id is not None
            self._emit_browsing(t, win, ev.EV_PAGE_UNLOADED, tab.tab_id, load_id=load.load_id)
            self.gt.sessions[win.session].loads[load.load_id].end = t

    # -- session lifecycle

    def _open_session(self, t: int, win: _Win, reason: str) -> None:
        session_id = self.alloc("session")
        win.session = session_id
        win.session_tabs = 1
        self.gt.sessions[session_id] = GTSession(
            session_id=session_id, window_id=win.window_id, user_id=self.user_id, start=t)
        self._emit_session(t, win, ev.EV_SESSION_START)
        if reason == "window_open":
            self._emit_window(t, win, ev.EV_WINDOW_OPEN)
        elif reason == "logging_on":
            self._emit_session(t, win, ev.EV_LOGGING_ON)
        elif reason == "private_off":
            self._emit_session(t, win, ev.EV_PRIVATE_OFF)
        if self.focused != win.key:
            self._emit_window(t, win, ev.EV_FOCUS_LOST)  # state sync: starts unfocused
        if self._observably_inactive():
            self._emit_session(t, win, ev.EV_USER_INACTIVE)  # state sync

    def _close_session(self, t: int, win: _Win, reason: str) -> None:
        assert win.session is not None
        session = self.gt.sessions[win.session]
        if reason == "suspend":
            self._emit_session(t, win, ev.EV_LOGGING_OFF)
        elif reason == "private":
            self._emit_session(t, win, ev.EV_PRIVATE_ON)
        self._emit_session(t, win, ev.EV_SESSION_END)
        if win.current_focus is not None:
            # the page stays visible across a suspension, but unlogged
            _, load = win.current_focus
            win.current_focus = (None, load)
        self._finalize_session(t, session, win, reason)
        win.session = None

    def _finalize_session(self, t: int, session: GTSession, win: _Win, reason: str) -> None:
        session.end = t
        session.end_cause = reason
        span = (session.start, t)
        for load in session.loads.values():
            if load.end is None:
                load.end = t
                load.closed_by = "session-end"
        for focus in session.focuses.values():
            if focus.end is None:
                focus.end = t
                focus.closed_by = "session-end"
        background = [iv for iv in self._unfocused_within(win, span)
                      if iv.length >= GT_DEBOUNCE_MS]
        session.background = background
        session.focused = subtract([span], background)
        if win.minimized_since is not None:
            start = max(win.minimized_since, span[0])
            if t > start:
                session.minimized.append(Interval(start, t))
            win.minimized_since = None  # observable state resets with the session
        session.minimized = normalize(session.minimized)
        session.inactive = self._clip_inactive(span)
        session.active = subtract([span], session.inactive)
        session.window_deltas = [(session.start, 1), (t, -1)]
        session.tab_deltas.insert(0, (session.start, 1))
        if win.session_tabs:
            session.tab_deltas.append((t, -win.session_tabs))
        win.session_tabs = 0

    def _unfocused_within(self, win: _Win, span: tuple[int, int]) -> list[Interval]:
        spans = list(win.gt_unfocused)
        if win.unfocused_since is not None:
            spans.append((win.unfocused_since, span[1]))
        clipped = [Interval(max(s, span[0]), min(e, span[1])) for s, e in spans
                   if min(e, span[1]) > max(s, span[0])]
        return normalize(clipped)

    def _clip_inactive(self, span: tuple[int, int]) -> list[Interval]:
        out = []
        for start, end in self._inactive_spans:
            e = span[1] if end is None else min(end, span[1])
            s = max(start, span[0])
            if e > s:
                out.append(Interval(s, e))
        return normalize(out)

    # -- action dispatch

    def run(self, actions: list[Action]) -> tuple[GTUser, list[ev.EventRecord]]:
        for action in actions:
            self._handle(action)
        return self.gt, self.events

    def _handle(self, action: Action) -> None:
        if action.op not in ACTION_OPS:
            raise InvalidConfig(f"unknown action op {action.op!r}")
        if self._last_t is not None and action.t <= self._last_t:
            raise InvalidConfig(f"action times must be strictly increasing (at t={action.t})")
        self._last_t = action.t
        self._flush_timers(action.t)
        if action.op not in _NON_ACTIVITY_OPS:
            self._mark_activity(action.t)
        getattr(self, f"_op_{action.op}")(action.t, action)

    def _require_window(self, action: Action) -> _Win:
        win = self.windows.get(action.window)
        if win is None:
            raise InvalidConfig(f"action {action.op!r} on unknown window {action.window!r}")
        return win

    def _logging_active(self) -> bool:
        return self.logging_enabled and not self.private

    def _op_window_open(self, t: int, action: Action) -> None:
        if action.window in self.windows:
            raise InvalidConfig(f"window {action.window!r} already open")
        old = self.windows.get(self.focused) if self.focused else None
        if old is not None:
            self._unfocus(t, old, emit=True)
        window_id = self.alloc("window")
        win = _Win(key=action.window, window_id=window_id)
        self.windows[action.window] = win
        self.focused = action.window
        self.focus_mru.append(action.window)
        if self._logging_active():
            self._open_session(t, win, "window_open")

    def _op_window_close(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        if win.session is not None:
            self._hide(t, win)
            for tab_id in sorted(win.tabs):
                self._unload(t, win, win.tabs[tab_id])
            self._emit_window(t, win, ev.EV_WINDOW_CLOSE)
            self._close_session(t, win, "window_close")
        del self.windows[action.window]
        if action.window in self.focus_mru:
            self.focus_mru.remove(action.window)
        if self.focused == action.window:
            self.focused = None
            if self.focus_mru:
                next_key = self.focus_mru[-1]
                self._refocus(t, self.windows[next_key], emit=True)
                self.focused = next_key

    def _op_tab_open(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        win.tab_counter += 1
        tab = _Tab(tab_id=win.tab_counter)
        win.tabs[tab.tab_id] = tab
        if win.session is not None:
            win.session_tabs += 1
            self._emit_window(t, win, ev.EV_TAB_OPEN, tab_id=tab.tab_id)
            self.gt.sessions[win.session].tab_deltas.append((t, 1))
        if action.activate:
            self._hide(t, win)
            win.active_tab = tab.tab_id

    def _op_tab_close(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        tab = win.tabs.get(action.tab)
        if tab is None:
            raise InvalidConfig(f"tab {action.tab} not open in window {action.window!r}")
        if len(win.tabs) == 1:
            raise InvalidConfig("closing the last tab closes the window; use window_close")
        was_active = win.active_tab == tab.tab_id
        if was_active:
            self._hide(t, win)
        self._unload(t, win, tab)
        del win.tabs[tab.tab_id]
        if win.session is not None:
            self._emit_window(t, win, ev.EV_TAB_CLOSE, tab_id=tab.tab_id)
            self.gt.sessions[win.session].tab_deltas.append((t, -1))
            win.session_tabs = max(0, win.session_tabs - 1)
        if was_active:
            later = [tid for tid in win.tabs if tid > tab.tab_id]
            win.active_tab = min(later) if later else max(win.tabs)
            neighbor = win.tabs[win.active_tab]
            if neighbor.load is not None:
                self._show(t, win, neighbor, ev.CAUSE_TAB_SELECTED)

    def _op_tab_activate(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        if action.tab not in win.tabs:
            raise InvalidConfig(f"tab {action.tab} not open in window {action.window!r}")
        if win.active_tab == action.tab:
            return
        self._hide(t, win)
        win.active_tab = action.tab
        tab = win.tabs[action.tab]
        if tab.load is not None:
            self._show(t, win, tab, ev.CAUSE_TAB_SELECTED)

    def _op_navigate(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        tab_id = action.tab or win.active_tab
        tab = win.tabs.get(tab_id)
        if tab is None:
            raise InvalidConfig(f"tab {tab_id} not open in window {action.window!r}")
        if action.cause not in ev.LOAD_CAUSES:
            raise InvalidConfig(f"navigate needs a load cause 1..9, got {action.cause}")
        if tab.load is not None:
            if win.active_tab == tab_id:
                self._hide(t, win)
            self._unload(t, win, tab)
        logged = win.session is not None
        load_id = self.alloc("load") if logged else None
        load = _Load(load_id=load_id, url=action.url, logged_in=win.session)
        tab.load = load
        if logged:
            assert load_id is not None and win.session is not None
            levels = decompose(action.url)
            url_digest = digest(levels)
            self._emit_browsing(t, win, ev.EV_PAGE_LOADED, tab_id,
                                load_id=load_id, cause=action.cause, url=url_digest)
            self.gt.sessions[win.session].loads[load_id] = GTLoad(
                load_id=load_id, tab_id=tab_id, url=action.url, levels=levels,
                digest=url_digest, cause=action.cause, start=t)
            self.gt.url_of_load[load_id] = action.url
        if win.active_tab == tab_id:
            self._show(t, win, tab, ev.CAUSE_BECAME_VISIBLE_LOAD)

    def _op_focus_window(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        if self.focused == action.window:
            return
        old = self.windows.get(self.focused) if self.focused else None
        if old is not None:
            self._unfocus(t, old, emit=True)
        self._refocus(t, win, emit=True)
        self.focused = action.window
        if action.window in self.focus_mru:
            self.focus_mru.remove(action.window)
        self.focus_mru.append(action.window)

    def _op_blur_all(self, t: int, action: Action) -> None:
        old = self.windows.get(self.focused) if self.focused else None
        if old is None:
            return
        self._unfocus(t, old, emit=True)
        self.focused = None

    def _op_window_state(self, t: int, action: Action) -> None:
        win = self._require_window(action)
        if action.state not in ev.WINDOW_STATES:
            raise InvalidConfig(f"window_state needs a state 1..4, got {action.state}")
        if action.state == win.state:
            return
        win.state = action.state
        if win.session is None:
            return
        self._emit_window(t, win, ev.EV_WINDOW_STATE, window_state=action.state)
        session = self.gt.sessions[win.session]
        if action.state == ev.STATE_MINIMIZED:
            win.minimized_since = t
        elif win.minimized_since is not None:
            session.minimized.append(Interval(win.minimized_since, t))
            win.minimized_since = None

    def _op_activity(self, t: int, action: Action) -> None:
        pass  # _mark_activity already ran

    def _op_logging_off(self, t: int, action: Action) -> None:
        if not self.logging_enabled:
            return
        self.logging_enabled = False
        if not self.private:
            for win in self._sessions_open():
                self._close_session(t, win, "suspend")

    def _op_logging_on(self, t: int, action: Action) -> None:
        if self.logging_enabled:
            return
        self.logging_enabled = True
        if not self.private:
            for win in self.windows.values():
                self._open_session(t, win, "logging_on")

    def _op_private_on(self, t: int, action: Action) -> None:
        if self.private:
            return
        self.private = True
        if self.logging_enabled:
            for win in self._sessions_open():
                self._close_session(t, win, "private")

    def _op_private_off(self, t: int, action: Action) -> None:
        if not self.private:
            return
        self.private = False
        if self.logging_enabled:
            for win in self.windows.values():
                self._open_session(t, win, "private_off")


# ---------------------------------------------------------------------------
# Id allocation


class SequentialIds:
    """Deterministic allocator for scripted scenarios: one shared counter."""

    def __init__(self, start: int = 1000):
        self._next = start

    def __call__(self, kind: str) -> int:
        value = self._next
        self._next += 1
        return value


class RandomIds:
    """Seeded unique random u64 ids, as an installed add-on would draw them."""

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._used: set[int] = set()

    def __call__(self, kind: str) -> int:
        while True:
            value = self._rng.getrandbits(64)
            if value and value not in self._used:
                self._used.add(value)
                return value


# ---------------------------------------------------------------------------
# Random behavior generation


class _UserScript:
    """Generates one user's action list, mirroring just enough browser state
    to keep every action feasible (tab numbers follow the emulator's
    per-window counter)."""

    def __init__(self, rng: random.Random, cfg: ScenarioConfig):
        self.rng = rng
        self.cfg = cfg
        self.actions: list[Action] = []
        self.t = 0
        self.windows: dict[str, dict] = {}
        self.focused: str | None = None

    def _emit(self, op: str, **kw) -> None:
        self.actions.append(Action(t=self.t, op=op, **kw))

    def _advance(self, lo_s: float, hi_s: float) -> None:
        self.t += max(1, int(self.rng.uniform(lo_s, hi_s) * 1000))

    def _pick_cause(self) -> int:
        causes = [c for c, _ in self.cfg.cause_weights]
        weights = [w for _, w in self.cfg.cause_weights]
        return self.rng.choices(causes, weights=weights)[0]

    def _open_window(self, key: str) -> None:
        self._emit("window_open", window=key)
        self.windows[key] = {"tabs": [1], "active": 1, "counter": 1, "minimized": False}
        self.focused = key

    def _close_window(self, key: str) -> None:
        self._emit("window_close", window=key)
        del self.windows[key]
        if self.focused == key:
            self.focused = next(iter(self.windows), None)

    def _navigate(self, key: str, tab: int) -> None:
        self._emit("navigate", window=key, tab=tab,
                   url=self.rng.choice(self.cfg.url_corpus), cause=self._pick_cause())

    def episode(self, start_ms: int) -> None:
        cfg, rng = self.cfg, self.rng
        self.t = start_ms
        duration = int(rng.uniform(*cfg.session_duration_s) * 1000)
        end_t = start_ms + duration
        self._open_window("w1")
        self._advance(0.5, 3.0)
        self._navigate("w1", 1)
        second_window_at = None
        if rng.random() < cfg.extra_window_prob:
            second_window_at = start_ms + rng.randint(2_000, max(3_000, duration // 2))

        choices = (
            ("navigate", cfg.navigate_weight),
            ("tab_open", cfg.tab_open_weight),
            ("tab_close", cfg.tab_close_weight),
            ("tab_switch", cfg.tab_switch_weight),
            ("window_switch", cfg.window_switch_weight),
            ("focus_blip", cfg.focus_blip_weight),
            ("background", cfg.background_weight),
            ("minimize", cfg.minimize_weight),
        )
        ops = [name for name, _ in choices]
        weights = [w for _, w in choices]

        while True:
            if rng.random() < cfg.idle_prob:
                gap_ms = int(rng.uniform(*cfg.idle_gap_s) * 1000)
                if rng.random() < cfg.activity_ping_prob:
                    self.t += gap_ms // 2
                    self._emit("activity")
                    self.t += gap_ms - gap_ms // 2
                else:
                    self.t += gap_ms
            else:
                self._advance(*cfg.action_gap_s)
            if second_window_at is not None and self.t >= second_window_at:
                second_window_at = None
                if "w2" not in self.windows:
                    self._open_window("w2")
                    self._advance(0.5, 3.0)
                    self._navigate("w2", 1)
                    continue
            if self.t >= end_t:
                break
            self._step(rng.choices(ops, weights=weights)[0])

        # close whatever is open, extra window first
        for key in sorted(self.windows, reverse=True):
            self._advance(0.5, 2.0)
            self._close_window(key)

    def _step(self, op: str) -> None:
        rng = self.rng
        key = self.focused if self.focused in self.windows else next(iter(self.windows))
        state = self.windows[key]
        if state["minimized"]:
            self._emit("window_state", window=key, state=ev.STATE_NORMAL)
            state["minimized"] = False
            return
        if op == "navigate":
            # mostly the active tab; sometimes a freshly referenced background tab
            tab = state["active"] if rng.random() < 0.8 else rng.choice(state["tabs"])
            self._navigate(key, tab)
        elif op == "tab_open":
            activate = rng.random() < 0.6
            state["counter"] += 1
            tab = state["counter"]
            state["tabs"].append(tab)
            self._emit("tab_open", window=key, activate=activate)
            if activate:
                state["active"] = tab
            self._advance(0.5, 4.0)
            self._navigate(key, tab)
        elif op == "tab_close" and len(state["tabs"]) > 1:
            tab = rng.choice(state["tabs"])
            state["tabs"].remove(tab)
            self._emit("tab_close", window=key, tab=tab)
            if state["active"] == tab:
                later = [x for x in state["tabs"] if x > tab]
                state["active"] = min(later) if later else max(state["tabs"])
        elif op == "tab_switch" and len(state["tabs"]) > 1:
            tab = rng.choice([x for x in state["tabs"] if x != state["active"]])
            state["active"] = tab
            self._emit("tab_activate", window=key, tab=tab)
        elif op == "window_switch" and len(self.windows) > 1:
            other = next(k for k in self.windows if k != key)
            self.focused = other
            self._emit("focus_window", window=other)
        elif op == "focus_blip":
            self._emit("blur_all")
            self.t += rng.randint(500, 9_500)  # below the debounce threshold
            self._emit("focus_window", window=key)
        elif op == "background":
            self._emit("blur_all")
            self.t += rng.randint(10_000, 45_000)  # at or above the threshold
            self._emit("focus_window", window=key)
        elif op == "minimize":
            self._emit("window_state", window=key, state=ev.STATE_MINIMIZED)
            state["minimized"] = True
            self.t += rng.randint(3_000, 20_000)
            self._emit("window_state", window=key, state=ev.STATE_NORMAL)
            state["minimized"] = False


def generate(config: ScenarioConfig) -> tuple[GroundTruth, list[ev.EventRecord]]:
    """Deterministic (GroundTruth, event stream) for a scenario config.

    The stream is exactly what correct add-ons would emit for the generated
    behavior, fault free; apply inject_faults for degraded variants. Events
    of different users are interleaved by time.
    """
    rng = random.Random(config.seed)
    alloc = RandomIds(rng)
    truth = GroundTruth()
    all_events: list[tuple[int, int, ev.EventRecord]] = []
    for user_index in range(config.users):
        user_id = alloc("user")
        tz_offset = rng.choice(config.tz_offsets)
        script = _UserScript(rng, config)
        cursor = config.start_time_ms + rng.randint(0, 1_800_000)
        for _ in range(config.sessions_per_user):
            script.episode(cursor)
            cursor = script.t + rng.randint(60_000, 900_000)
        emulator = AddonEmulator(user_id=user_id, tz_offset=tz_offset, alloc=alloc)
        gt_user, user_events = emulator.run(script.actions)
        truth.users[user_id] = gt_user
        all_events.extend((record.core.time, user_index, record) for record in user_events)
    all_events.sort(key=lambda item: item[0])  # stable: ties keep per-user order
    return truth, [record for _, _, record in all_events]


# ---------------------------------------------------------------------------
# Scripted scenarios (shared with the capture client)


def load_scenario(source: "str | Path | dict") -> dict:
    """Load and validate a scripted scenario (path or already-parsed dict)."""
    if isinstance(source, (str, Path)):
        scenario = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        scenario = dict(source)
    if not isinstance(scenario.get("user_id"), int):
        raise InvalidConfig("scenario needs an integer user_id")
    scenario.setdefault("name", "unnamed")
    scenario.setdefault("tz_offset", 0)
    scenario.setdefault("id_start", 1000)
    scenario.setdefault("start_time_ms", 1_362_000_000_000)
    actions = scenario.get("actions")
    if not isinstance(actions, list) or not actions:
        raise InvalidConfig("scenario needs a non-empty actions list")
    return scenario


def scenario_actions(scenario: dict) -> list[Action]:
    base = scenario["start_time_ms"]
    out = []
    for raw in scenario["actions"]:
        fields = {k: v for k, v in raw.items() if k != "t"}
        unknown = set(fields) - {"op", "window", "tab", "url", "cause", "state", "activate"}
        if unknown:
            raise InvalidConfig(f"unknown action fields: {sorted(unknown)}")
        out.append(Action(t=base + int(raw["t"]), **fields))
    return out


def run_scenario(source: "str | Path | dict") -> tuple[GroundTruth, list[ev.EventRecord]]:
    """Run one scripted single-user scenario with sequential ids."""
    scenario = load_scenario(source)
    emulator = AddonEmulator(
        user_id=scenario["user_id"],
        tz_offset=scenario["tz_offset"],
        alloc=SequentialIds(scenario["id_start"]),
    )
    gt_user, records = emulator.run(scenario_actions(scenario))
    truth = GroundTruth(users={scenario["user_id"]: gt_user})
    return truth, records


# ---------------------------------------------------------------------------
# Fault injection


def inject_faults(records: list[ev.EventRecord], fault: FaultConfig,
                  seed: int = 0) -> list[ev.EventRecord]:
    """Degrade a stream the way §network loss and killed browsers would.

    Session-end drops remove the 201 and every same-timestamp event of that
    session (the whole closing cascade dies with the process); random drops
    remove individual events blindly.
    """
    rng = random.Random(seed)
    drop: set[int] = set()

    end_time: dict[int, int] = {}
    for record in records:
        if record.event_id == ev.EV_SESSION_END:
            end_time[record.core.session_id] = record.core.time
    if fault.drop_session_end_prob > 0:
        for session_id in sorted(end_time):
            if rng.random() < fault.drop_session_end_prob:
                cutoff = end_time[session_id]
                for index, record in enumerate(records):
                    if record.core.session_id == session_id and record.core.time == cutoff:
                        drop.add(index)

    if fault.drop_random_event_prob > 0:
        for index in range(len(records)):
            if index not in drop and rng.random() < fault.drop_random_event_prob:
                drop.add(index)

    return [record for index, record in enumerate(records) if index not in drop]
