#!/usr/bin/env python3
"""Regenerate the scripted scenario files under scenarios/.

Scenarios are deterministic JSON action scripts consumed by both the Python
simulator (browsetel simulate --script) and the TypeScript capture client's
replay harness. Run this after changing a scenario definition; the outputs
are committed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "scenarios"

BASE_T = 1_362_000_000_000


def scenario(name, user_id, actions, tz_offset=-120, id_start=1000):
    return {
        "name": name,
        "user_id": user_id,
        "tz_offset": tz_offset,
        "id_start": id_start,
        "start_time_ms": BASE_T,
        "actions": actions,
    }


def a(t, op, **kw):
    return {"t": t, "op": op, **kw}


def parallel_user1():
    """Single session whose open-tab profile matches the target fractions:
    >=2 tabs 78% of the time, >=4 40%, >=8 18%, >=16 1%."""
    acts = [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://radio.tunes.fm/live", cause=2),
    ]
    t = 220_000
    acts.append(a(t, "tab_open", window="w1"))                      # -> 2 tabs
    for i in range(2):
        acts.append(a(600_000 + i, "tab_open", window="w1"))        # -> 4 tabs
    for i in range(4):
        acts.append(a(820_000 + i, "tab_open", window="w1"))        # -> 8 tabs
    for i in range(8):
        acts.append(a(990_000 + i, "tab_open", window="w1"))        # -> 16 tabs
    acts.append(a(1_000_000, "window_close", window="w1"))
    return scenario("parallel-user1", 101, acts)


def tree_21_tabs_50_loads():
    """One window, 21 used tabs, 50 page loads: a 10-load chain in the first
    tab plus 20 side tabs with two loads each, mostly branching from tab 1."""
    urls = [
        "http://wiki.reference.net/article/%d" % i for i in range(1, 31)
    ] + [
        "http://news.example.org/story/%d" % i for i in range(1, 31)
    ]
    acts = [a(0, "window_open", window="w1")]
    t = 1_000
    url_index = 0

    def nav(tab, cause=1):
        nonlocal t, url_index
        acts.append(a(t, "navigate", window="w1", tab=tab, url=urls[url_index % len(urls)], cause=cause))
        url_index += 1
        t += 2_000

    nav(1, cause=2)
    for side in range(20):
        # branch a new background tab off the currently visible tab-1 load
        acts.append(a(t, "tab_open", window="w1"))
        t += 1_000
        side_tab = 2 + side
        nav(side_tab, cause=1)   # first load in the new tab (background)
        nav(side_tab, cause=1)   # second load, same tab
        if side % 4 == 1:
            # hop over to the side tab and back: tab-level focus changes
            acts.append(a(t, "tab_activate", window="w1", tab=side_tab))
            t += 1_500
            acts.append(a(t, "tab_activate", window="w1", tab=1))
            t += 1_500
        if side % 2 == 1 and side < 18:
            nav(1, cause=1)      # extend the tab-1 chain
    # chain currently has 1 + 9 loads; side tabs carry 40: total 50
    acts.append(a(t, "window_close", window="w1"))
    return scenario("tree-21-tabs-50-loads", 102, acts)


# --- wire-parity scenarios (shared with the capture client) -----------------


def parity_single_page():
    return scenario("single-page", 201, [
        a(0, "window_open", window="w1"),
        a(1_500, "navigate", window="w1", tab=1, url="http://example.org/", cause=2),
        a(20_000, "window_close", window="w1"),
    ])


def parity_tab_browsing():
    return scenario("tab-browsing", 202, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://news.example.org/world/2013/story?id=1", cause=2),
        a(5_000, "tab_open", window="w1", activate=True),
        a(6_000, "navigate", window="w1", tab=2, url="http://wiki.reference.net/article/Tabs", cause=1),
        a(15_000, "tab_activate", window="w1", tab=1),
        a(22_000, "tab_activate", window="w1", tab=2),
        a(30_000, "tab_close", window="w1", tab=2),
        a(40_000, "window_close", window="w1"),
    ])


def parity_two_windows():
    return scenario("two-windows", 203, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://radio.tunes.fm/live", cause=3),
        a(4_000, "window_open", window="w2"),
        a(5_000, "navigate", window="w2", tab=1, url="http://mail.example.org/inbox", cause=2),
        a(25_000, "focus_window", window="w1"),
        a(31_000, "focus_window", window="w2"),
        a(45_000, "window_close", window="w2"),
        a(50_000, "window_close", window="w1"),
    ])


def parity_idle_resume():
    return scenario("idle-resume", 204, [
        a(0, "window_open", window="w1"),
        a(2_000, "navigate", window="w1", tab=1, url="http://video.stream-hub.com/watch?v=42", cause=1),
        # no activity for 100 s: 210 fires at 102 000; resume at 123 456
        a(123_456, "activity"),
        # 211 lands on the 5 s poll grid at 125 000
        a(130_000, "navigate", window="w1", tab=1, url="http://stream-hub.com/chart", cause=1),
        a(140_000, "window_close", window="w1"),
    ])


def parity_suspend_resume():
    return scenario("suspend-resume", 205, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://example.org/", cause=2),
        a(10_000, "logging_off"),
        a(12_000, "navigate", window="w1", tab=1, url="http://forum.community.io/thread/7", cause=1),
        a(30_000, "logging_on"),
        a(35_000, "navigate", window="w1", tab=1, url="http://community.io/", cause=1),
        a(45_000, "window_close", window="w1"),
    ])


def parity_private_browsing():
    return scenario("private-browsing", 206, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://example.org/", cause=2),
        a(8_000, "private_on"),
        a(9_000, "navigate", window="w1", tab=1, url="http://shop.b.co.uk/items?page=2", cause=1),
        a(20_000, "private_off"),
        a(26_000, "navigate", window="w1", tab=1, url="http://b.co.uk/", cause=2),
        a(33_000, "window_close", window="w1"),
    ])


def parity_window_states():
    return scenario("window-states", 207, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://wiki.reference.net/article/Tabs", cause=2),
        a(5_000, "window_state", window="w1", state=1),
        a(12_000, "window_state", window="w1", state=2),
        a(25_000, "window_state", window="w1", state=3),
        a(31_000, "window_state", window="w1", state=4),
        a(40_000, "window_close", window="w1"),
    ])


def parity_background_tabs():
    return scenario("background-tabs", 208, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://news.example.org/world/2013/story?id=1", cause=2),
        a(4_000, "tab_open", window="w1"),  # stays in the background
        a(5_000, "navigate", window="w1", tab=2, url="http://video.stream-hub.com/watch?v=42", cause=1),
        a(9_000, "tab_open", window="w1"),
        a(10_000, "navigate", window="w1", tab=3, url="http://radio.tunes.fm/live", cause=1),
        a(18_000, "tab_close", window="w1", tab=2),
        a(24_000, "tab_activate", window="w1", tab=3),
        a(32_000, "window_close", window="w1"),
    ])


def parity_all_causes():
    urls = [
        ("http://example.org/", 2),
        ("http://news.example.org/world/2013/story?id=1", 1),
        ("http://mail.example.org/inbox", 3),
        ("http://stream-hub.com/chart", 4),
        ("http://video.stream-hub.com/watch?v=42", 5),
        ("http://radio.tunes.fm/live", 6),
        ("http://wiki.reference.net/article/Tabs", 7),
        ("http://reference.net/search?q=tabs", 8),
        ("http://forum.community.io/thread/7", 9),
    ]
    acts = [a(0, "window_open", window="w1")]
    t = 1_000
    for url, cause in urls:
        acts.append(a(t, "navigate", window="w1", tab=1, url=url, cause=cause))
        t += 3_000
    acts.append(a(t, "window_close", window="w1"))
    return scenario("all-causes", 209, acts)


def parity_multi_window_suspend():
    """Suspension with two open windows: per-window close/reopen cascades in
    window-open order, and a synchronizing 150 for the unfocused window."""
    return scenario("multi-window-suspend", 211, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://example.org/", cause=2),
        a(4_000, "window_open", window="w2"),
        a(5_000, "navigate", window="w2", tab=1, url="http://mail.example.org/inbox", cause=2),
        a(9_000, "logging_off"),
        a(14_000, "focus_window", window="w1"),   # focus moves while suspended
        a(20_000, "logging_on"),
        a(27_000, "window_close", window="w2"),
        a(33_000, "window_close", window="w1"),
    ])


def parity_kitchen_sink():
    return scenario("kitchen-sink", 210, [
        a(0, "window_open", window="w1"),
        a(1_000, "navigate", window="w1", tab=1, url="http://example.org/", cause=2),
        a(3_000, "tab_open", window="w1", activate=True),
        a(4_000, "navigate", window="w1", tab=2, url="http://b.co.uk/", cause=1),
        a(7_000, "blur_all"),
        a(11_000, "focus_window", window="w1"),      # 4 s gap: below the threshold
        a(15_000, "blur_all"),
        a(25_000, "focus_window", window="w1"),      # exactly 10 s: background
        a(27_000, "window_state", window="w1", state=2),
        a(33_000, "window_state", window="w1", state=3),
        # idle gap of exactly 60 s after the 33 000 action: 210 at 93 000
        a(93_000, "tab_activate", window="w1", tab=1),
        a(100_000, "tab_close", window="w1", tab=2),
        a(110_000, "window_close", window="w1"),
    ])


SCENARIOS = [
    parallel_user1(),
    tree_21_tabs_50_loads(),
    parity_single_page(),
    parity_tab_browsing(),
    parity_two_windows(),
    parity_idle_resume(),
    parity_suspend_resume(),
    parity_private_browsing(),
    parity_window_states(),
    parity_background_tabs(),
    parity_all_causes(),
    parity_multi_window_suspend(),
    parity_kitchen_sink(),
]


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    for item in SCENARIOS:
        path = OUT / f"{item['name']}.json"
        path.write_text(json.dumps(item, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
