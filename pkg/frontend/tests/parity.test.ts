/**
 * Wire parity against the collector-side simulator.
 *
 * Each scripted scenario in ../../scenarios is replayed through the client;
 * every POST body must equal the corresponding line of the golden stream the
 * simulator wrote for the same scenario. A final check posts every body to a
 * live collector process and expects 204 for each.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { runScenario, type Scenario } from "../src/adapter.js";
import { parseSnapshot } from "../src/psl.js";
import { MemoryTransport } from "../src/transport.js";

const REPO = join(__dirname, "..", "..");
const STREAMS = join(__dirname, "fixtures", "streams");
const RULES = parseSnapshot(
  readFileSync(join(REPO, "src", "browsetel", "data", "public_suffix_list.dat"), "utf-8"));

const SCENARIO_NAMES = readdirSync(STREAMS)
  .filter((name) => name.endsWith(".jsonl"))
  .map((name) => name.replace(/\.jsonl$/, ""))
  .sort();

function loadScenario(name: string): Scenario {
  return JSON.parse(readFileSync(join(REPO, "scenarios", `${name}.json`), "utf-8"));
}

function goldenLines(name: string): string[] {
  return readFileSync(join(STREAMS, `${name}.jsonl`), "utf-8").split("\n").filter(Boolean);
}

function replay(name: string): MemoryTransport {
  const transport = new MemoryTransport();
  runScenario(loadScenario(name), transport, RULES);
  return transport;
}

describe("wire parity with the collector-side simulator", () => {
  it("covers at least ten scenarios", () => {
    expect(SCENARIO_NAMES.length).toBeGreaterThanOrEqual(10);
  });

  for (const name of SCENARIO_NAMES) {
    it(`emits byte-identical bodies for ${name}`, () => {
      const transport = replay(name);
      const bodies = transport.events.map((e) => e.body);
      expect(bodies).toEqual(goldenLines(name));
    });
  }
});

describe("live collector accepts every replayed event", () => {
  let proc: ChildProcess | undefined;
  let baseUrl = "";
  let dataDir = "";

  beforeAll(async () => {
    dataDir = mkdtempSync(join(tmpdir(), "browsetel-collector-"));
    proc = spawn("python3", ["-m", "browsetel.cli", "serve",
                             "--listen", "127.0.0.1:0", "--data-dir", dataDir], {
      env: { ...process.env, PYTHONPATH: join(REPO, "src") },
      stdio: ["ignore", "pipe", "inherit"],
    });
    baseUrl = await new Promise<string>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("collector did not start")), 15_000);
      proc!.stdout!.on("data", (chunk: Buffer) => {
        const match = /listening on ([0-9.]+):(\d+)/.exec(chunk.toString());
        if (match) {
          clearTimeout(timer);
          resolve(`http://${match[1]}:${match[2]}`);
        }
      });
      proc!.on("exit", (code) => reject(new Error(`collector exited early (${code})`)));
    });
  }, 20_000);

  afterAll(() => {
    proc?.kill();
    if (dataDir) {
      rmSync(dataDir, { recursive: true, force: true });
    }
  });

  it("returns 204 for every event of every scenario", async () => {
    let posted = 0;
    for (const name of SCENARIO_NAMES) {
      const transport = replay(name);
      for (const event of transport.events) {
        const response = await fetch(baseUrl + event.route, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: event.body,
        });
        expect(response.status, `${name}: ${event.body}`).toBe(204);
        posted += 1;
      }
    }
    expect(posted).toBeGreaterThan(100);
  }, 60_000);
});
