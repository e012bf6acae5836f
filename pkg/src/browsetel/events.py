"""Canonical event records, validation, and the JSON wire codec.

Three event families share one set of core attributes and are told apart by
their event_id range: window events (1xx), session events (2xx), browsing
events (4xx). Timestamps are epoch milliseconds from the client clock;
tz_offset is UTC minus local time in minutes (GMT+2 gives -120).

The wire format is one compact JSON object per event with a fixed key order,
so independently written emitters can produce byte-identical payloads:

    time, tz_offset, user_id, window_id, session_id, tab_id, event_id,
    then family-specific keys: window_state | load_id/focus_id, cause,
    url_domain, url_subdomain, url_path, url_full

Optional keys are omitted entirely when absent (never null). No plaintext URL
and no keystroke content is representable in any record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Union

from .urls import HEX40_RE, UrlDigest

# Window events
EV_WINDOW_OPEN = 100
EV_WINDOW_CLOSE = 101
EV_TAB_OPEN = 110
EV_TAB_CLOSE = 111
EV_WINDOW_STATE = 140
EV_FOCUS_LOST = 150
EV_FOCUS_GAINED = 151

# Session events
EV_SESSION_START = 200
EV_SESSION_END = 201
EV_USER_INACTIVE = 210
EV_USER_ACTIVE = 211
EV_LOGGING_OFF = 220
EV_LOGGING_ON = 221
EV_PRIVATE_ON = 230
EV_PRIVATE_OFF = 231

# Browsing events
EV_PAGE_LOADED = 400
EV_PAGE_UNLOADED = 410
EV_PAGE_VISIBLE = 420
EV_PAGE_HIDDEN = 430

WINDOW_EVENT_IDS = frozenset(
    {EV_WINDOW_OPEN, EV_WINDOW_CLOSE, EV_TAB_OPEN, EV_TAB_CLOSE,
     EV_WINDOW_STATE, EV_FOCUS_LOST, EV_FOCUS_GAINED}
)
SESSION_EVENT_IDS = frozenset(
    {EV_SESSION_START, EV_SESSION_END, EV_USER_INACTIVE, EV_USER_ACTIVE,
     EV_LOGGING_OFF, EV_LOGGING_ON, EV_PRIVATE_ON, EV_PRIVATE_OFF}
)
BROWSING_EVENT_IDS = frozenset(
    {EV_PAGE_LOADED, EV_PAGE_UNLOADED, EV_PAGE_VISIBLE, EV_PAGE_HIDDEN}
)

# Window states (event 140 payload)
STATE_MAXIMIZED = 1
STATE_MINIMIZED = 2
STATE_NORMAL = 3
STATE_FULLSCREEN = 4
WINDOW_STATES = frozenset({STATE_MAXIMIZED, STATE_MINIMIZED, STATE_NORMAL, STATE_FULLSCREEN})

# Page-load causes (event 400)
CAUSE_LINK = 1
CAUSE_TYPED = 2
CAUSE_BOOKMARK = 3
CAUSE_EMBED = 4
CAUSE_REDIRECT_PERMANENT = 5
CAUSE_REDIRECT_TEMPORARY = 6
CAUSE_DOWNLOAD = 7
CAUSE_FRAMED_LINK = 8
CAUSE_HISTORY = 9
LOAD_CAUSES = frozenset(range(1, 10))

# Visibility causes (event 420)
CAUSE_BECAME_VISIBLE_LOAD = 10
CAUSE_TAB_SELECTED = 11
VISIBILITY_CAUSES = frozenset({CAUSE_BECAME_VISIBLE_LOAD, CAUSE_TAB_SELECTED})

MAX_U64 = 2**64 - 1
MAX_U32 = 2**32 - 1

FAMILY_WINDOW = "window"
FAMILY_SESSION = "session"
FAMILY_BROWSING = "browsing"
FAMILIES = (FAMILY_WINDOW, FAMILY_SESSION, FAMILY_BROWSING)


class MalformedPayload(ValueError):
    """Wire payload is not a structurally valid event object."""


class UnknownEventId(MalformedPayload):
    """event_id does not belong to any family."""


@dataclass(frozen=True, slots=True)
class CoreAttributes:
    """Attributes carried by every event.

    tab_id is only unique within its window; analytics identify a tab by the
    pair (window_id, tab_id).
    """

    time: int
    tz_offset: int
    user_id: int
    window_id: int
    session_id: int
    tab_id: int


@dataclass(frozen=True, slots=True)
class WindowEvent:
    core: CoreAttributes
    event_id: int
    window_state: int | None = None


@dataclass(frozen=True, slots=True)
class SessionEvent:
    core: CoreAttributes
    event_id: int


@dataclass(frozen=True, slots=True)
class BrowsingEvent:
    core: CoreAttributes
    event_id: int
    load_id: int | None = None
    focus_id: int | None = None
    cause: int | None = None
    url: UrlDigest | None = None


EventRecord = Union[WindowEvent, SessionEvent, BrowsingEvent]


def family_of(record: EventRecord) -> str:
    if isinstance(record, WindowEvent):
        return FAMILY_WINDOW
    if isinstance(record, SessionEvent):
        return FAMILY_SESSION
    return FAMILY_BROWSING


def family_of_event_id(event_id: int) -> str | None:
    if event_id in WINDOW_EVENT_IDS:
        return FAMILY_WINDOW
    if event_id in SESSION_EVENT_IDS:
        return FAMILY_SESSION
    if event_id in BROWSING_EVENT_IDS:
        return FAMILY_BROWSING
    return None


@dataclass(frozen=True, slots=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True, slots=True)
class ValidationResult:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def _check_core(core: CoreAttributes, out: list[Violation]) -> None:
    if core.time < 0:
        out.append(Violation("value-out-of-range", f"time must be >= 0, got {core.time}"))
    if not (-840 <= core.tz_offset <= 840) or core.tz_offset % 15 != 0:
        out.append(Violation(
            "value-out-of-range",
            f"tz_offset must be in [-840, 840] and divisible by 15, got {core.tz_offset}",
        ))
    for name in ("user_id", "window_id", "session_id"):
        value = getattr(core, name)
        if not (1 <= value <= MAX_U64):
            out.append(Violation("value-out-of-range", f"{name} must be a nonzero u64, got {value}"))
    if not (0 <= core.tab_id <= MAX_U32):
        out.append(Violation("value-out-of-range", f"tab_id must be a u32, got {core.tab_id}"))


def _check_id_field(name: str, value: int | None, required: bool, out: list[Violation]) -> None:
    if required:
        if value is None:
            out.append(Violation("missing-field", f"{name} is required for this event_id"))
        elif not (1 <= value <= MAX_U64):
            out.append(Violation("value-out-of-range", f"{name} must be a nonzero u64, got {value}"))
    elif value is not None:
        out.append(Violation("unexpected-field", f"{name} must be absent for this event_id"))


def validate(record: EventRecord) -> ValidationResult:
    """Check a decoded record against every family constraint.

    Pure: never mutates. Returns all violations, not just the first.
    """
    out: list[Violation] = []
    _check_core(record.core, out)

    if isinstance(record, WindowEvent):
        if record.event_id not in WINDOW_EVENT_IDS:
            out.append(Violation("unknown-event-id", f"unknown window event_id {record.event_id}"))
            return ValidationResult(tuple(out))
        if record.event_id == EV_WINDOW_STATE:
            if record.window_state is None:
                out.append(Violation("missing-field", "event 140 requires window_state"))
            elif record.window_state not in WINDOW_STATES:
                out.append(Violation("value-out-of-range", f"window_state must be 1..4, got {record.window_state}"))
        elif record.window_state is not None:
            out.append(Violation("unexpected-field", "window_state is only valid for event 140"))
        if record.event_id in (EV_TAB_OPEN, EV_TAB_CLOSE):
            if record.core.tab_id == 0:
                out.append(Violation("missing-field", "tab events 110/111 require a nonzero tab_id"))
        elif record.core.tab_id != 0:
            out.append(Violation("unexpected-field", "tab_id must be 0 except for events 110/111"))

    elif isinstance(record, SessionEvent):
        if record.event_id not in SESSION_EVENT_IDS:
            out.append(Violation("unknown-event-id", f"unknown session event_id {record.event_id}"))
            return ValidationResult(tuple(out))
        if record.core.tab_id != 0:
            out.append(Violation("unexpected-field", "session events are not tab-scoped; tab_id must be 0"))

    elif isinstance(record, BrowsingEvent):
        if record.event_id not in BROWSING_EVENT_IDS:
            out.append(Violation("unknown-event-id", f"unknown browsing event_id {record.event_id}"))
            return ValidationResult(tuple(out))
        is_load = record.event_id in (EV_PAGE_LOADED, EV_PAGE_UNLOADED)
        _check_id_field("load_id", record.load_id, required=is_load, out=out)
        _check_id_field("focus_id", record.focus_id, required=not is_load, out=out)
        if record.event_id == EV_PAGE_LOADED:
            if record.cause is None:
                out.append(Violation("missing-field", "event 400 requires a cause"))
            elif record.cause not in LOAD_CAUSES:
                out.append(Violation("cause-out-of-range", f"load cause must be 1..9, got {record.cause}"))
        elif record.event_id == EV_PAGE_VISIBLE:
            if record.cause is None:
                out.append(Violation("missing-field", "event 420 requires a cause"))
            elif record.cause not in VISIBILITY_CAUSES:
                out.append(Violation("cause-out-of-range", f"visibility cause must be 10 or 11, got {record.cause}"))
        elif record.cause is not None:
            out.append(Violation("unexpected-field", "events 410/430 carry no cause"))
        if record.event_id == EV_PAGE_LOADED:
            if record.url is None:
                out.append(Violation("missing-field", "event 400 requires url digests"))
            else:
                for level_field in ("domain_hash", "subdomain_hash", "path_hash", "full_hash"):
                    value = getattr(record.url, level_field)
                    if not isinstance(value, str) or not HEX40_RE.match(value):
                        out.append(Violation(
                            "value-out-of-range",
                            f"url {level_field} must be 40 lowercase hex chars",
                        ))
        elif record.url is not None:
            out.append(Violation("unexpected-field", "only event 400 carries url digests"))
        if record.core.tab_id == 0:
            out.append(Violation("missing-field", "browsing events require a nonzero tab_id"))

    return ValidationResult(tuple(out))


_CORE_KEYS = ("time", "tz_offset", "user_id", "window_id", "session_id", "tab_id")
_URL_KEYS = ("url_domain", "url_subdomain", "url_path", "url_full")


def to_wire_dict(record: EventRecord) -> dict:
    """Event as a plain dict in canonical key order."""
    core = record.core
    out: dict = {key: getattr(core, key) for key in _CORE_KEYS}
    out["event_id"] = record.event_id
    if isinstance(record, WindowEvent):
        if record.window_state is not None:
            out["window_state"] = record.window_state
    elif isinstance(record, BrowsingEvent):
        if record.load_id is not None:
            out["load_id"] = record.load_id
        if record.focus_id is not None:
            out["focus_id"] = record.focus_id
        if record.cause is not None:
            out["cause"] = record.cause
        if record.url is not None:
            out["url_domain"] = record.url.domain_hash
            out["url_subdomain"] = record.url.subdomain_hash
            out["url_path"] = record.url.path_hash
            out["url_full"] = record.url.full_hash
    return out


def encode(record: EventRecord) -> bytes:
    """Serialize a valid record to its canonical wire bytes.

    Raises ValueError when the record does not validate; only clean events may
    reach the wire.
    """
    result = validate(record)
    if not result.ok:
        raise ValueError(f"refusing to encode invalid record: {result.violations[0].message}")
    return json.dumps(to_wire_dict(record), separators=(",", ":")).encode("utf-8")


def _require_int(obj: dict, key: str) -> int:
    if key not in obj:
        raise MalformedPayload(f"missing required key {key!r}")
    value = obj[key]
    if type(value) is not int:
        raise MalformedPayload(f"key {key!r} must be an integer")
    return value


def _optional_int(obj: dict, key: str) -> int | None:
    if key not in obj:
        return None
    value = obj[key]
    if type(value) is not int:
        raise MalformedPayload(f"key {key!r} must be an integer")
    return value


def _optional_str(obj: dict, key: str) -> str | None:
    if key not in obj:
        return None
    value = obj[key]
    if not isinstance(value, str):
        raise MalformedPayload(f"key {key!r} must be a string")
    return value


def from_wire_dict(obj: dict) -> EventRecord:
    """Build a record from a parsed wire object.

    Structural checks only (presence-per-family and types); value ranges and
    conditional-presence rules are validate()'s job. Unknown keys are
    rejected so misspelled fields cannot be dropped silently.
    """
    if not isinstance(obj, dict):
        raise MalformedPayload("event payload must be a JSON object")
    event_id = _require_int(obj, "event_id")
    family = family_of_event_id(event_id)
    if family is None:
        raise UnknownEventId(f"event_id {event_id} belongs to no family")

    core = CoreAttributes(*(_require_int(obj, key) for key in _CORE_KEYS))

    allowed = set(_CORE_KEYS) | {"event_id"}
    if family == FAMILY_WINDOW:
        allowed.add("window_state")
    elif family == FAMILY_BROWSING:
        allowed |= {"load_id", "focus_id", "cause", *_URL_KEYS}
    unknown = set(obj) - allowed
    if unknown:
        raise MalformedPayload(f"unknown keys for {family} event: {sorted(unknown)}")

    if family == FAMILY_WINDOW:
        return WindowEvent(core=core, event_id=event_id, window_state=_optional_int(obj, "window_state"))
    if family == FAMILY_SESSION:
        return SessionEvent(core=core, event_id=event_id)

    url: UrlDigest | None = None
    url_values = [_optional_str(obj, key) for key in _URL_KEYS]
    if any(v is not None for v in url_values):
        if any(v is None for v in url_values):
            raise MalformedPayload("url digests must be present for all four levels or none")
        url = UrlDigest(*url_values)  # type: ignore[arg-type]
    return BrowsingEvent(
        core=core,
        event_id=event_id,
        load_id=_optional_int(obj, "load_id"),
        focus_id=_optional_int(obj, "focus_id"),
        cause=_optional_int(obj, "cause"),
        url=url,
    )


def decode(data: "bytes | str") -> EventRecord:
    """Parse wire bytes back into a record. decode(encode(r)) == r."""
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedPayload(f"not valid JSON: {exc}") from exc
    return from_wire_dict(obj)


def sort_key(record: EventRecord) -> tuple[int, int]:
    """(time, semantic rank) ordering for same-millisecond events.

    Within one millisecond the rank keeps intervals well nested: a session
    start opens everything, hides come before unloads, closes before opens,
    and the session end closes everything. Stable sorts preserve arrival
    order between events of equal time and rank.
    """
    return (record.core.time, _SEMANTIC_RANK.get(record.event_id, 99))


_SEMANTIC_RANK = {
    EV_SESSION_START: 0,
    EV_WINDOW_OPEN: 1,
    EV_LOGGING_ON: 2,
    EV_PRIVATE_OFF: 3,
    EV_FOCUS_LOST: 4,
    EV_USER_INACTIVE: 5,
    EV_USER_ACTIVE: 6,
    EV_TAB_OPEN: 7,
    EV_PAGE_HIDDEN: 8,
    EV_PAGE_UNLOADED: 9,
    EV_TAB_CLOSE: 10,
    EV_FOCUS_GAINED: 11,
    EV_WINDOW_STATE: 12,
    EV_PAGE_LOADED: 13,
    EV_PAGE_VISIBLE: 14,
    EV_LOGGING_OFF: 15,
    EV_PRIVATE_ON: 16,
    EV_WINDOW_CLOSE: 17,
    EV_SESSION_END: 18,
}


def order_events(records: Iterable[EventRecord]) -> list[EventRecord]:
    """Sort records by (time, semantic rank), stable on arrival order."""
    return sorted(records, key=sort_key)
