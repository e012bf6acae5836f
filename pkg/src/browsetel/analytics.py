"""Behavioral measures computed from reconstructed timelines.

Time accounting distinguishes, per URL level key:

    loaded   the page (or any page of the key) is open in some tab
    display  the page is in the active tab of a focused, non-minimized window
    viewing  the display time during which the user is explicitly active

so viewing <= display <= loaded holds for every key. Durations are interval
union lengths; overlapping tabs of the same key are never double counted.

Navigation trees root every session at a synthetic browser-startup node:
same-tab loads extend their tab's branch, the first load of a new tab
branches from the load that was visible when the tab was opened. Graph
measures (diameter, average path length) are computed on the undirected
tree; community structure uses greedy modularity maximization with
deterministic ordering so the score is reproducible run to run.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

import networkx as nx

from . import events as ev
from .intervals import Interval, intersect, normalize, subtract, total_length
from .reconstruct import ConcurrencyProfile, SessionTimeline
from .urls import URL_LEVELS, UrlDigest


class EmptyProfile(ValueError):
    pass


class ZeroDurationSession(ValueError):
    pass


class EmptyTree(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class TimeAccount:
    key: str
    loaded_ms: int
    display_ms: int
    viewing_ms: int
    load_count: int


def time_accounting(timeline: SessionTimeline, level: str = "domain") -> list[TimeAccount]:
    """Per-key loaded/display/viewing totals at the chosen URL level."""
    if level not in URL_LEVELS:
        raise ValueError(f"unknown URL level {level!r}")
    loaded: dict[str, list[Interval]] = defaultdict(list)
    display: dict[str, list[Interval]] = defaultdict(list)
    counts: Counter[str] = Counter()
    for load in timeline.loads.values():
        if load.url is None or load.end is None:
            continue
        key = load.url.for_level(level)
        counts[key] += 1
        loaded[key].append(load.interval)
        window = timeline.windows.get(load.window_id)
        if window is None or not load.visible:
            continue
        shown = intersect(load.visible, window.focused)
        shown = subtract(shown, window.minimized)
        display[key].extend(shown)

    accounts = []
    for key in sorted(loaded):
        display_ivs = normalize(display.get(key, []))
        viewing_ivs = intersect(display_ivs, timeline.active)
        account = TimeAccount(
            key=key,
            loaded_ms=total_length(loaded[key]),
            display_ms=total_length(display_ivs),
            viewing_ms=total_length(viewing_ivs),
            load_count=counts[key],
        )
        assert account.viewing_ms <= account.display_ms <= account.loaded_ms
        accounts.append(account)
    return accounts


def _time_with_count_at_least(points, spans, k: int) -> int:
    """Total time within `spans` where the step function is >= k."""
    above: list[Interval] = []
    open_at: int | None = None
    for t, count in points:
        if count >= k and open_at is None:
            open_at = t
        elif count < k and open_at is not None:
            above.append(Interval(open_at, t))
            open_at = None
    if open_at is not None and spans:
        above.append(Interval(open_at, max(s.end for s in spans)))
    return total_length(intersect(above, spans))


@dataclass(frozen=True)
class ParallelUsage:
    windows: dict[int, float]
    tabs: dict[int, float]


def parallel_usage(profile: ConcurrencyProfile, thresholds: list[int]) -> ParallelUsage:
    """Fraction of observed time with at least k open windows / tabs."""
    observed = total_length(profile.spans)
    if observed == 0:
        raise EmptyProfile("profile covers no observed time")
    spans = list(profile.spans)
    return ParallelUsage(
        windows={k: _time_with_count_at_least(profile.window_points, spans, k) / observed
                 for k in thresholds},
        tabs={k: _time_with_count_at_least(profile.tab_points, spans, k) / observed
              for k in thresholds},
    )


@dataclass(frozen=True)
class InactivityRatios:
    explicit_inactive_ratio: float
    implicit_inactive_ratio: float
    background_ratio: float


def inactivity_ratios(timeline: SessionTimeline) -> InactivityRatios:
    """Explicit/implicit inactive and window-background shares of a timeline.

    The background ratio is the mean over windows weighted by each window's
    open duration, i.e. total background time over total window-open time.
    """
    duration = timeline.duration
    if duration == 0:
        raise ZeroDurationSession(f"sessions {timeline.session_ids} cover no time")
    open_total = sum(total_length(w.open_spans) for w in timeline.windows.values())
    background_total = sum(total_length(w.background) for w in timeline.windows.values())
    return InactivityRatios(
        explicit_inactive_ratio=total_length(timeline.inactive) / duration,
        implicit_inactive_ratio=total_length(timeline.implicit_inactive) / duration,
        background_ratio=(background_total / open_total) if open_total else 0.0,
    )


@dataclass(frozen=True)
class CauseHistogram:
    load_counts: dict[int, int]
    load_frequencies: dict[int, float]
    visibility_counts: dict[int, int]
    visibility_frequencies: dict[int, float]


def cause_histogram(records: list[ev.EventRecord]) -> CauseHistogram:
    """Distribution of page-load causes (1-9) and visibility causes (10-11)."""
    load_counts: Counter[int] = Counter()
    visibility_counts: Counter[int] = Counter()
    for record in records:
        if not isinstance(record, ev.BrowsingEvent) or record.cause is None:
            continue
        if record.event_id == ev.EV_PAGE_LOADED:
            load_counts[record.cause] += 1
        elif record.event_id == ev.EV_PAGE_VISIBLE:
            visibility_counts[record.cause] += 1

    def frequencies(counts: Counter[int]) -> dict[int, float]:
        total = sum(counts.values())
        return {cause: counts[cause] / total for cause in sorted(counts)} if total else {}

    return CauseHistogram(
        load_counts=dict(sorted(load_counts.items())),
        load_frequencies=frequencies(load_counts),
        visibility_counts=dict(sorted(visibility_counts.items())),
        visibility_frequencies=frequencies(visibility_counts),
    )


ROOT_ID = 0  # synthetic browser-startup node; real load_ids are nonzero

EDGE_SAME_TAB = "same-tab"
EDGE_NEW_TAB = "new-tab"


@dataclass(frozen=True, slots=True)
class TreeNode:
    load_id: int
    tab: tuple[int, int] | None  # (window_id, tab_id); None for the root
    url: UrlDigest | None
    time: int


@dataclass(frozen=True, slots=True)
class TreeEdge:
    parent: int
    child: int
    kind: str


@dataclass
class NavigationTree:
    nodes: dict[int, TreeNode] = field(default_factory=dict)
    edges: list[TreeEdge] = field(default_factory=list)

    @property
    def page_loads(self) -> int:
        return len(self.nodes) - 1  # root excluded

    def children(self, node_id: int) -> list[int]:
        return [e.child for e in self.edges if e.parent == node_id]


def build_navigation_tree(records: list[ev.EventRecord]) -> NavigationTree:
    """Navigation tree of one session.

    The parent of a same-tab load is the previous load in that tab; the
    parent of the first load in a new tab is the load that was visible in the
    window when the tab was opened. Loads with no candidate parent attach to
    the synthetic root: with a same-tab edge for a window's initial tab,
    with a new-tab edge for tabs opened into an empty window.
    """
    tree = NavigationTree()
    tree.nodes[ROOT_ID] = TreeNode(load_id=ROOT_ID, tab=None, url=None, time=0)
    last_load: dict[tuple[int, int], int] = {}
    current_load: dict[tuple[int, int], int | None] = defaultdict(lambda: None)
    visible_load: dict[int, int | None] = defaultdict(lambda: None)
    pending_parent: dict[tuple[int, int], int | None] = {}

    for record in ev.order_events(records):
        core = record.core
        if isinstance(record, ev.WindowEvent) and record.event_id == ev.EV_TAB_OPEN:
            pending_parent[(core.window_id, core.tab_id)] = visible_load[core.window_id]
            continue
        if not isinstance(record, ev.BrowsingEvent):
            continue
        tab_key = (core.window_id, core.tab_id)
        if record.event_id == ev.EV_PAGE_LOADED:
            load_id = record.load_id
            if load_id is None or load_id in tree.nodes:
                continue
            if tab_key in last_load:
                parent, kind = last_load[tab_key], EDGE_SAME_TAB
            elif tab_key in pending_parent:
                origin = pending_parent.pop(tab_key)
                parent, kind = (origin, EDGE_NEW_TAB) if origin is not None else (ROOT_ID, EDGE_NEW_TAB)
            else:
                parent, kind = ROOT_ID, EDGE_SAME_TAB
            tree.nodes[load_id] = TreeNode(load_id=load_id, tab=tab_key, url=record.url, time=core.time)
            tree.edges.append(TreeEdge(parent=parent, child=load_id, kind=kind))
            last_load[tab_key] = load_id
            current_load[tab_key] = load_id
        elif record.event_id == ev.EV_PAGE_UNLOADED:
            if current_load[tab_key] == record.load_id:
                current_load[tab_key] = None
        elif record.event_id == ev.EV_PAGE_VISIBLE:
            visible_load[core.window_id] = current_load[tab_key]
        elif record.event_id == ev.EV_PAGE_HIDDEN:
            visible_load[core.window_id] = None
    return tree


@dataclass(frozen=True)
class TreeMetrics:
    tabs_used: int
    page_loads: int
    tabs_per_load: float
    focus_changes: int
    window_focus_changes: int
    diameter: int
    avg_path_length: float
    max_outdegree: int
    modularity: float
    communities: tuple[tuple[int, ...], ...]


def _metric_graph(tree: NavigationTree, include_root: bool | None) -> nx.Graph:
    """Undirected view for path/community metrics.

    The root is kept only when it has two or more children (or when forced);
    a single-child root is a degree-1 relay that would stretch every path by
    one hop without describing any navigation.
    """
    root_children = len(tree.children(ROOT_ID))
    if include_root is None:
        include_root = root_children >= 2
    graph = nx.Graph()
    for node_id in sorted(tree.nodes):
        if node_id == ROOT_ID and not include_root:
            continue
        graph.add_node(node_id)
    for edge in tree.edges:
        if not include_root and ROOT_ID in (edge.parent, edge.child):
            continue
        graph.add_edge(edge.parent, edge.child)
    return graph


def tree_metrics(tree: NavigationTree, records: list[ev.EventRecord] = (),
                 include_root: bool | None = None) -> TreeMetrics:
    """Characterizing measures of one session's navigation tree.

    focus_changes counts tab-level switches (420 with cause 11);
    window_focus_changes counts window focus gains (151) separately, since
    either reading of "focus change" can be wanted.
    """
    real_nodes = [n for nid, n in tree.nodes.items() if nid != ROOT_ID]
    if not real_nodes:
        raise EmptyTree("navigation tree has no page loads")

    tabs_used = len({n.tab for n in real_nodes})
    page_loads = len(real_nodes)
    outdegree: Counter[int] = Counter(e.parent for e in tree.edges)
    focus_changes = sum(
        1 for r in records
        if isinstance(r, ev.BrowsingEvent) and r.event_id == ev.EV_PAGE_VISIBLE
        and r.cause == ev.CAUSE_TAB_SELECTED
    )
    window_focus_changes = sum(
        1 for r in records
        if isinstance(r, ev.WindowEvent) and r.event_id == ev.EV_FOCUS_GAINED
    )

    graph = _metric_graph(tree, include_root)
    n = graph.number_of_nodes()
    if n <= 1:
        diameter, avg_path = 0, 0.0
    else:
        diameter = nx.diameter(graph)
        avg_path = nx.average_shortest_path_length(graph)

    if graph.number_of_edges() == 0:
        communities = [{node} for node in graph.nodes]
        modularity = 0.0
    else:
        communities = [set(c) for c in nx.community.greedy_modularity_communities(graph)]
        modularity = nx.community.modularity(graph, communities)

    return TreeMetrics(
        tabs_used=tabs_used,
        page_loads=page_loads,
        tabs_per_load=tabs_used / page_loads,
        focus_changes=focus_changes,
        window_focus_changes=window_focus_changes,
        diameter=diameter,
        avg_path_length=avg_path,
        max_outdegree=max(outdegree.values(), default=0),
        modularity=modularity,
        communities=tuple(tuple(sorted(c)) for c in sorted(communities, key=lambda c: min(c))),
    )
