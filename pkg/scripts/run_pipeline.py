#!/usr/bin/env python3
"""End-to-end pipeline demo: simulate users, ship their events to a live
collector over HTTP the way real clients would, export the store as a public
dataset, then reconstruct and report from that dataset.

Usage:
    python scripts/run_pipeline.py [--seed N] [--users N] [--out DIR]
"""

from __future__ import annotations

import argparse
import http.client
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from browsetel import events as ev  # noqa: E402
from browsetel import simulator as sim  # noqa: E402
from browsetel.cli import main as cli_main  # noqa: E402
from browsetel.collector import CollectorServer, CollectorService, IdRegistry  # noqa: E402
from browsetel.store import FileStore, export_dataset  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--users", type=int, default=3)
    parser.add_argument("--sessions-per-user", type=int, default=2)
    parser.add_argument("--out", default=None, help="output directory (default: a temp dir)")
    args = parser.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="browsetel-demo-"))
    out.mkdir(parents=True, exist_ok=True)
    print(f"pipeline outputs under {out}")

    config = sim.ScenarioConfig(seed=args.seed, users=args.users,
                                sessions_per_user=args.sessions_per_user)
    _, records = sim.generate(config)
    print(f"simulated {len(records)} events for {args.users} users")

    store = FileStore(out / "collector-data")
    service = CollectorService(store, IdRegistry(out / "collector-data"))
    with CollectorServer(service) as server:
        host, port = server.address
        print(f"collector at {host}:{port}; posting events...")
        conn = http.client.HTTPConnection(host, port)
        accepted = 0
        for record in records:
            conn.request("POST", f"/log/{ev.family_of(record)}", body=ev.encode(record))
            response = conn.getresponse()
            response.read()
            if response.status == 204:
                accepted += 1
        conn.close()
    print(f"collector accepted {accepted}/{len(records)} events")

    dataset = out / "dataset"
    export_dataset(store, dataset)
    store.close()

    rc = cli_main(["reconstruct", "--in", str(dataset), "--out", str(out / "timelines")])
    rc |= cli_main(["report", "--in", str(dataset), "--out", str(out / "report")])
    print(f"done; inspect {out / 'report'}")
    return rc


if __name__ == "__main__":
    sys.exit(main())
