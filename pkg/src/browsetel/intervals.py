"""Half-open integer interval arithmetic shared by reconstruction and analytics.

All intervals are (start, end) pairs of epoch milliseconds with start <= end,
covering [start, end). Zero-length intervals carry no time and are dropped by
normalization.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple


class Interval(NamedTuple):
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


def normalize(intervals: Iterable[tuple[int, int]]) -> list[Interval]:
    """Sort, drop empty intervals, and merge overlapping/adjacent ones."""
    items = sorted((s, e) for s, e in intervals if e > s)
    merged: list[Interval] = []
    for s, e in items:
        if merged and s <= merged[-1].end:
            if e > merged[-1].end:
                merged[-1] = Interval(merged[-1].start, e)
        else:
            merged.append(Interval(s, e))
    return merged


def total_length(intervals: Iterable[tuple[int, int]]) -> int:
    return sum(iv.length for iv in normalize(intervals))


def intersect(a: Iterable[tuple[int, int]], b: Iterable[tuple[int, int]]) -> list[Interval]:
    """Intersection of two interval sets (both normalized internally)."""
    xs, ys = normalize(a), normalize(b)
    out: list[Interval] = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        s = max(xs[i].start, ys[j].start)
        e = min(xs[i].end, ys[j].end)
        if e > s:
            out.append(Interval(s, e))
        if xs[i].end <= ys[j].end:
            i += 1
        else:
            j += 1
    return out


def subtract(a: Iterable[tuple[int, int]], b: Iterable[tuple[int, int]]) -> list[Interval]:
    """Time in `a` not covered by `b`."""
    xs, ys = normalize(a), normalize(b)
    out: list[Interval] = []
    j = 0
    for iv in xs:
        cursor = iv.start
        while j < len(ys) and ys[j].end <= cursor:
            j += 1
        k = j
        while k < len(ys) and ys[k].start < iv.end:
            if ys[k].start > cursor:
                out.append(Interval(cursor, ys[k].start))
            cursor = max(cursor, ys[k].end)
            if ys[k].end >= iv.end:
                break
            k += 1
        if cursor < iv.end:
            out.append(Interval(cursor, iv.end))
    return out


def clamp(intervals: Iterable[tuple[int, int]], start: int, end: int) -> list[Interval]:
    """Clip an interval set to the window [start, end)."""
    return intersect(intervals, [(start, end)])
