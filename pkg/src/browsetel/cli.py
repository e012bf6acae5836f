"""Operator entry point: serve, simulate, reconstruct, report, hash-url,
export, import.

Every output directory receives a manifest.json recording the command, its
normalized flags and their digest, and the tool version, so a report can be
traced back to exactly the invocation that produced it. Manifests carry no
wall-clock time: identical inputs and flags must produce byte-identical
output trees.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import analytics, events as ev, reconstruct as rec, simulator as sim
from .collector import CollectorServer, CollectorService, IdRegistry
from .store import FileStore, MemoryStore, MalformedLine, export_dataset, import_dataset, read_dataset
from .urls import InvalidUrl, decompose, digest

DEFAULT_THRESHOLDS = (2, 4, 8, 16)

DATA_DIR_ENV = "BROWSETEL_DATA_DIR"


def _data_dir_flag(parser: argparse.ArgumentParser) -> None:
    default = os.environ.get(DATA_DIR_ENV)
    parser.add_argument("--data-dir", default=default, required=default is None,
                        help=f"store directory (defaults to ${DATA_DIR_ENV})")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(out_dir: Path, command: str, flags: dict, inputs: list[str],
                    outputs: list[str]) -> None:
    canonical = json.dumps(flags, sort_keys=True, separators=(",", ":"))
    manifest = {
        "command": command,
        "flags": flags,
        "config_digest": hashlib.sha1(canonical.encode("utf-8")).hexdigest(),
        "seed": flags.get("seed"),
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "version": __version__,
    }
    _write_json(out_dir / "manifest.json", manifest)


def _intervals(items) -> list[list[int]]:
    return [[iv.start, iv.end] for iv in items]


def _timeline_payload(timeline: rec.SessionTimeline) -> dict:
    return {
        "session_ids": list(timeline.session_ids),
        "user_id": timeline.user_id,
        "start": timeline.start,
        "end": timeline.end,
        "end_sources": {str(k): v for k, v in timeline.end_sources.items()},
        "start_marker": timeline.start_marker,
        "end_marker": timeline.end_marker,
        "loads": [
            {
                "load_id": load.load_id,
                "window_id": load.window_id,
                "tab_id": load.tab_id,
                "cause": load.cause,
                "start": load.start,
                "end": load.end,
                "closed_by": load.closed_by,
                "url": asdict(load.url) if load.url else None,
                "visible": _intervals(load.visible),
            }
            for load in sorted(timeline.loads.values(), key=lambda l: (l.start, l.load_id))
        ],
        "focuses": [
            {
                "focus_id": focus.focus_id,
                "window_id": focus.window_id,
                "tab_id": focus.tab_id,
                "load_id": focus.load_id,
                "cause": focus.cause,
                "start": focus.start,
                "end": focus.end,
                "closed_by": focus.closed_by,
            }
            for focus in sorted(timeline.focuses.values(), key=lambda f: (f.start, f.focus_id))
        ],
        "windows": [
            {
                "window_id": w.window_id,
                "open": _intervals(w.open_spans),
                "window-focused": _intervals(w.focused),
                "window-background": _intervals(w.background),
                "window-minimized": _intervals(w.minimized),
            }
            for w in sorted(timeline.windows.values(), key=lambda w: w.window_id)
        ],
        "intervals": {
            "active": _intervals(timeline.active),
            "inactive": _intervals(timeline.inactive),
            "implicit-inactive": _intervals(timeline.implicit_inactive),
            "private-browsing": _intervals(timeline.private_gaps),
            "logging-off": _intervals(timeline.logging_off_gaps),
        },
        "window_deltas": [list(d) for d in sorted(timeline.window_deltas)],
        "tab_deltas": [list(d) for d in sorted(timeline.tab_deltas)],
        "anomalies": [asdict(a) for a in timeline.anomalies],
    }


def _recon_options(args) -> rec.ReconstructionOptions:
    return rec.ReconstructionOptions(
        debounce_ms=args.debounce_ms,
        idle_gap_ms=args.idle_ms,
        backdate_ms=args.backdate_ms,
        impute=args.impute,
        impute_offset_ms=args.offset_ms,
    )


def _add_recon_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--impute", choices=(rec.IMPUTE_FILTER, rec.IMPUTE_ESTIMATE),
                        default=rec.IMPUTE_ESTIMATE,
                        help="how to treat sessions without a recorded end")
    parser.add_argument("--offset-ms", type=int, default=0,
                        help="offset added to the last event time when estimating")
    parser.add_argument("--debounce-ms", type=int, default=rec.DEBOUNCE_MS,
                        help="minimum focus-loss duration counted as background time")
    parser.add_argument("--idle-ms", type=int, default=rec.IDLE_GAP_MS,
                        help="event gap treated as implicit inactivity")
    parser.add_argument("--backdate-ms", type=int, default=rec.IDLE_BACKDATE_MS,
                        help="how far an explicit inactive event is backdated")


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_serve(args) -> int:
    store = FileStore(args.data_dir, fsync=args.fsync)
    registry = IdRegistry(args.data_dir)
    service = CollectorService(store, registry)
    host, _, port = args.listen.rpartition(":")
    server = CollectorServer(service, host=host or "127.0.0.1", port=int(port),
                             token=args.token)
    bound_host, bound_port = server.address
    print(f"collector listening on {bound_host}:{bound_port}, data in {args.data_dir}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.httpd.server_close()
        store.close()
    return 0


def _gt_payload(truth: sim.GroundTruth) -> dict:
    users = {}
    for user_id, user in truth.users.items():
        users[str(user_id)] = {
            "tz_offset": user.tz_offset,
            "url_of_load": {str(k): v for k, v in user.url_of_load.items()},
            "sessions": {
                str(sid): {
                    "window_id": s.window_id,
                    "start": s.start,
                    "end": s.end,
                    "end_cause": s.end_cause,
                    "loads": {
                        str(lid): {
                            "tab_id": l.tab_id, "url": l.url, "cause": l.cause,
                            "start": l.start, "end": l.end, "closed_by": l.closed_by,
                        } for lid, l in s.loads.items()
                    },
                    "focuses": {
                        str(fid): {
                            "tab_id": f.tab_id, "load_id": f.load_id, "cause": f.cause,
                            "start": f.start, "end": f.end, "closed_by": f.closed_by,
                        } for fid, f in s.focuses.items()
                    },
                    "background": _intervals(s.background),
                    "focused": _intervals(s.focused),
                    "minimized": _intervals(s.minimized),
                    "inactive": _intervals(s.inactive),
                    "active": _intervals(s.active),
                    "window_deltas": [list(d) for d in s.window_deltas],
                    "tab_deltas": [list(d) for d in s.tab_deltas],
                } for sid, s in user.sessions.items()
            },
        }
    return {"users": users}


def _cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    if args.script:
        truth, records = sim.run_scenario(args.script)
        flags = {"script": str(args.script), "seed": None}
    else:
        config = sim.ScenarioConfig(seed=args.seed, users=args.users,
                                    sessions_per_user=args.sessions_per_user)
        truth, records = sim.generate(config)
        flags = {"seed": args.seed, "users": args.users,
                 "sessions_per_user": args.sessions_per_user}
    fault = sim.FaultConfig(drop_session_end_prob=args.drop_session_end,
                            drop_random_event_prob=args.drop_random)
    if fault.drop_session_end_prob or fault.drop_random_event_prob:
        records = sim.inject_faults(records, fault, seed=args.fault_seed)
    flags.update({"drop_session_end": args.drop_session_end,
                  "drop_random": args.drop_random, "fault_seed": args.fault_seed})

    store = MemoryStore()
    for record in records:
        store.append(record)
    export_dataset(store, out_dir)
    if args.ground_truth:
        # plaintext URLs live only here, never in the dataset files
        _write_json(out_dir / "ground_truth.json", _gt_payload(truth))
    outputs = sorted(str(p.name) for p in out_dir.iterdir())
    _write_manifest(out_dir, "simulate", flags, inputs=[], outputs=outputs)
    print(f"wrote {store.count()} events to {out_dir}")
    return 0


def _load_records(in_dir: str) -> list[ev.EventRecord]:
    return read_dataset(in_dir)


def _cmd_reconstruct(args) -> int:
    records = _load_records(args.in_dir)
    options = _recon_options(args)
    report = rec.reconstruct_all(records, options)
    out_dir = Path(args.out)
    payload = {
        "sessions": [_timeline_payload(t) for t in report.timelines],
        "excluded_sessions": [str(s) for s in report.excluded_sessions],
        "rejected_sessions": {str(k): v for k, v in report.rejected_sessions.items()},
    }
    _write_json(out_dir / "timelines.json", payload)
    flags = {name: getattr(args, name) for name in
             ("impute", "offset_ms", "debounce_ms", "idle_ms", "backdate_ms")}
    _write_manifest(out_dir, "reconstruct", flags, inputs=[str(args.in_dir)],
                    outputs=["timelines.json"])
    print(f"reconstructed {len(report.timelines)} sessions "
          f"({len(report.excluded_sessions)} excluded, "
          f"{len(report.rejected_sessions)} rejected) to {out_dir}")
    return 0


def _by_user(timelines: list[rec.SessionTimeline]) -> dict[int, list[rec.SessionTimeline]]:
    grouped: dict[int, list[rec.SessionTimeline]] = {}
    for timeline in timelines:
        grouped.setdefault(timeline.user_id, []).append(timeline)
    return grouped


def _report_time_accounting(out_dir, timelines, level):
    payload = {}
    rows = []
    for timeline in timelines:
        sid = timeline.session_ids[0]
        accounts = analytics.time_accounting(timeline, level)
        payload[str(sid)] = [asdict(a) for a in accounts]
        rows.extend([timeline.user_id, sid, level, a.key, a.loaded_ms, a.display_ms,
                     a.viewing_ms, a.load_count] for a in accounts)
    _write_json(out_dir / "time_accounting.json", {"level": level, "sessions": payload})
    _write_csv(out_dir / "time_accounting.csv",
               ["user_id", "session_id", "level", "key", "loaded_ms", "display_ms",
                "viewing_ms", "load_count"], rows)
    return ["time_accounting.json", "time_accounting.csv"]


def _report_parallel(out_dir, timelines, thresholds):
    payload = {}
    rows = []
    for user_id, user_timelines in sorted(_by_user(timelines).items()):
        profile = rec.concurrency_profile(user_timelines)
        usage = analytics.parallel_usage(profile, thresholds)
        payload[str(user_id)] = {
            "windows": {str(k): v for k, v in usage.windows.items()},
            "tabs": {str(k): v for k, v in usage.tabs.items()},
        }
        rows.extend([user_id, k, usage.windows[k], usage.tabs[k]] for k in thresholds)
    _write_json(out_dir / "parallel_usage.json", payload)
    _write_csv(out_dir / "parallel_usage.csv",
               ["user_id", "threshold", "windows_fraction", "tabs_fraction"], rows)
    return ["parallel_usage.json", "parallel_usage.csv"]


def _report_inactivity(out_dir, timelines):
    payload = {"sessions": {}, "users": {}}
    rows = []
    for timeline in timelines:
        sid = timeline.session_ids[0]
        ratios = analytics.inactivity_ratios(timeline)
        payload["sessions"][str(sid)] = asdict(ratios)
        rows.append(["session", timeline.user_id, sid,
                     ratios.explicit_inactive_ratio, ratios.implicit_inactive_ratio,
                     ratios.background_ratio])
    for user_id, user_timelines in sorted(_by_user(timelines).items()):
        merged = rec.merge_timelines(user_timelines)
        ratios = analytics.inactivity_ratios(merged)
        payload["users"][str(user_id)] = asdict(ratios)
        rows.append(["user", user_id, "",
                     ratios.explicit_inactive_ratio, ratios.implicit_inactive_ratio,
                     ratios.background_ratio])
    _write_json(out_dir / "inactivity.json", payload)
    _write_csv(out_dir / "inactivity.csv",
               ["scope", "user_id", "session_id", "explicit_inactive_ratio",
                "implicit_inactive_ratio", "background_ratio"], rows)
    return ["inactivity.json", "inactivity.csv"]


def _report_causes(out_dir, records):
    histogram = analytics.cause_histogram(records)
    _write_json(out_dir / "causes.json", {
        "load_counts": {str(k): v for k, v in histogram.load_counts.items()},
        "load_frequencies": {str(k): v for k, v in histogram.load_frequencies.items()},
        "visibility_counts": {str(k): v for k, v in histogram.visibility_counts.items()},
        "visibility_frequencies": {str(k): v for k, v in histogram.visibility_frequencies.items()},
    })
    rows = [["load", k, histogram.load_counts[k], histogram.load_frequencies[k]]
            for k in histogram.load_counts]
    rows += [["visibility", k, histogram.visibility_counts[k],
              histogram.visibility_frequencies[k]] for k in histogram.visibility_counts]
    _write_csv(out_dir / "causes.csv", ["kind", "cause", "count", "frequency"], rows)
    return ["causes.json", "causes.csv"]


def _report_tree_metrics(out_dir, records, timelines):
    by_session = rec.group_by_session(records)
    payload = {}
    rows = []
    for timeline in timelines:
        sid = timeline.session_ids[0]
        session_records = by_session.get(sid, [])
        tree = analytics.build_navigation_tree(session_records)
        if tree.page_loads == 0:
            continue
        metrics = analytics.tree_metrics(tree, session_records)
        entry = asdict(metrics)
        entry["communities"] = [list(c) for c in metrics.communities]
        payload[str(sid)] = entry
        rows.append([timeline.user_id, sid, metrics.tabs_used, metrics.page_loads,
                     metrics.tabs_per_load, metrics.focus_changes,
                     metrics.window_focus_changes, metrics.diameter,
                     metrics.avg_path_length, metrics.max_outdegree, metrics.modularity])
    _write_json(out_dir / "tree_metrics.json", payload)
    _write_csv(out_dir / "tree_metrics.csv",
               ["user_id", "session_id", "tabs_used", "page_loads", "tabs_per_load",
                "focus_changes", "window_focus_changes", "diameter", "avg_path_length",
                "max_outdegree", "modularity"], rows)
    return ["tree_metrics.json", "tree_metrics.csv"]


def _cmd_report(args) -> int:
    records = _load_records(args.in_dir)
    options = _recon_options(args)
    report = rec.reconstruct_all(records, options)
    timelines = report.timelines
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    selected = {name for name in ("time_accounting", "parallel", "inactivity",
                                  "causes", "tree_metrics") if getattr(args, name)}
    if not selected:
        selected = {"time_accounting", "parallel", "inactivity", "causes", "tree_metrics"}
    thresholds = [int(x) for x in args.thresholds.split(",")] if args.thresholds else list(DEFAULT_THRESHOLDS)

    outputs = []
    if "time_accounting" in selected:
        outputs += _report_time_accounting(out_dir, timelines, args.level)
    if "parallel" in selected:
        outputs += _report_parallel(out_dir, timelines, thresholds)
    if "inactivity" in selected:
        outputs += _report_inactivity(out_dir, timelines)
    if "causes" in selected:
        outputs += _report_causes(out_dir, records)
    if "tree_metrics" in selected:
        outputs += _report_tree_metrics(out_dir, records, timelines)

    flags = {name: getattr(args, name) for name in
             ("impute", "offset_ms", "debounce_ms", "idle_ms", "backdate_ms",
              "level", "thresholds")}
    flags["analyses"] = sorted(selected)
    _write_manifest(out_dir, "report", flags, inputs=[str(args.in_dir)], outputs=outputs)
    print(f"wrote {', '.join(sorted(outputs))} to {out_dir}")
    return 0


def _cmd_hash_url(args) -> int:
    levels = decompose(args.url)
    digests = digest(levels)
    for label, text, value in (
        ("domain", levels.domain, digests.domain_hash),
        ("subdomain", levels.subdomain, digests.subdomain_hash),
        ("path", levels.path, digests.path_hash),
        ("full", levels.full, digests.full_hash),
    ):
        print(f"{label:<10} {value}  {text}")
    return 0


def _cmd_export(args) -> int:
    store = FileStore(args.data_dir)
    try:
        export_dataset(store, args.out)
    finally:
        store.close()
    print(f"exported dataset to {args.out}")
    return 0


def _cmd_import(args) -> int:
    store = FileStore(args.data_dir)
    try:
        added = import_dataset(store, args.in_dir)
    finally:
        store.close()
    print(f"imported {added} events into {args.data_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="browsetel",
        description="browsing-telemetry pipeline: collect, simulate, reconstruct, report",
    )
    parser.add_argument("--version", action="version", version=f"browsetel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP collector")
    p.add_argument("--listen", default="127.0.0.1:8080", help="host:port to bind")
    _data_dir_flag(p)
    p.add_argument("--token", default=None, help="require this X-Collector-Token header")
    p.add_argument("--fsync", action="store_true", help="fsync after every append")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("simulate", help="generate a synthetic event dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=2)
    p.add_argument("--sessions-per-user", type=int, default=2)
    p.add_argument("--script", default=None, help="scripted scenario JSON instead of random behavior")
    p.add_argument("--drop-session-end", type=float, default=0.0,
                   help="probability a session loses its whole closing cascade")
    p.add_argument("--drop-random", type=float, default=0.0,
                   help="probability any single event is lost")
    p.add_argument("--fault-seed", type=int, default=0)
    p.add_argument("--no-ground-truth", dest="ground_truth", action="store_false",
                   help="do not write ground_truth.json (it contains plaintext URLs)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct", help="rebuild session timelines from a dataset")
    p.add_argument("--in", dest="in_dir", required=True, help="dataset directory")
    p.add_argument("--out", required=True)
    _add_recon_flags(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("report", help="compute analytics from a dataset")
    p.add_argument("--in", dest="in_dir", required=True, help="dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--time-accounting", dest="time_accounting", action="store_true")
    p.add_argument("--level", choices=("domain", "subdomain", "path", "full"), default="domain")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--thresholds", default=None, help="comma-separated k values (default 2,4,8,16)")
    p.add_argument("--inactivity", action="store_true")
    p.add_argument("--causes", action="store_true")
    p.add_argument("--tree-metrics", dest="tree_metrics", action="store_true")
    _add_recon_flags(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("hash-url", help="print the four level digests of a URL")
    p.add_argument("url")
    p.set_defaults(func=_cmd_hash_url)

    p = sub.add_parser("export", help="export a store directory as a public dataset")
    _data_dir_flag(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("import", help="import a public dataset into a store directory")
    _data_dir_flag(p)
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(func=_cmd_import)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidUrl, sim.InvalidConfig, MalformedLine, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
