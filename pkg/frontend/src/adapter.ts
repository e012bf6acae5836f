/**
 * Adapter implementations.
 *
 * A real deployment binds BrowserAdapter to WebExtension APIs (tabs, windows,
 * webNavigation, idle); that thin layer is deliberately out of scope here.
 * ScriptedAdapter replays a recorded scenario, which is how headless tests
 * and the cross-implementation parity checks drive the client.
 */

import type { AdapterCallback, BrowserAdapter } from "./client.js";
import { CaptureClient, sequentialIds } from "./client.js";
import type { Transport } from "./transport.js";

export interface Scenario {
  name: string;
  user_id: number;
  tz_offset: number;
  id_start: number;
  start_time_ms: number;
  actions: Array<Omit<AdapterCallback, "t"> & { t: number }>;
}

export class ScriptedAdapter implements BrowserAdapter {
  constructor(private readonly callbacks: AdapterCallback[]) {}

  subscribe(listener: (callback: AdapterCallback) => void): void {
    for (const callback of this.callbacks) {
      listener(callback);
    }
  }
}

/** Replay one scripted scenario through a fresh client. */
export function runScenario(scenario: Scenario, transport: Transport,
                            pslRules: Iterable<string>): void {
  const client = new CaptureClient({
    userId: scenario.user_id,
    tzOffset: scenario.tz_offset,
    transport,
    pslRules,
    idAllocator: sequentialIds(scenario.id_start),
  });
  const callbacks = scenario.actions.map((action) => ({
    ...action,
    t: scenario.start_time_ms + action.t,
  }));
  client.attach(new ScriptedAdapter(callbacks));
}
