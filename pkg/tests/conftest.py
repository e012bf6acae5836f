import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"

sys.path.insert(0, str(REPO / "src"))

from browsetel import events as ev  # noqa: E402
from browsetel.urls import digest_url  # noqa: E402


def make_core(time=1_000, tz_offset=-120, user_id=7, window_id=11, session_id=13, tab_id=0):
    return ev.CoreAttributes(time=time, tz_offset=tz_offset, user_id=user_id,
                             window_id=window_id, session_id=session_id, tab_id=tab_id)


def window_event(event_id, window_state=None, **core_kw):
    return ev.WindowEvent(core=make_core(**core_kw), event_id=event_id, window_state=window_state)


def session_event(event_id, **core_kw):
    return ev.SessionEvent(core=make_core(**core_kw), event_id=event_id)


def browsing_event(event_id, load_id=None, focus_id=None, cause=None,
                   url="http://example.org/", **core_kw):
    core_kw.setdefault("tab_id", 1)
    url_digest = digest_url(url) if url is not None else None
    return ev.BrowsingEvent(core=make_core(**core_kw), event_id=event_id,
                            load_id=load_id, focus_id=focus_id, cause=cause, url=url_digest)


@pytest.fixture
def scenario_path():
    def _path(name: str) -> Path:
        return SCENARIOS / f"{name}.json"
    return _path
