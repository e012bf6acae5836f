/**
 * Fire-and-forget delivery of wire events to the collector.
 *
 * A failed POST is dropped silently and the next event is sent as if nothing
 * happened: no retries, no buffering, no error surface. If the network is
 * gone the user has probably stopped browsing anyway.
 */

import type { WireEvent } from "./events.js";

export interface Transport {
  send(event: WireEvent): void;
}

export interface HttpTransportOptions {
  baseUrl: string;
  enabled?: boolean;
  token?: string;
}

export class HttpTransport implements Transport {
  private readonly baseUrl: string;
  private readonly enabled: boolean;
  private readonly token?: string;

  constructor(options: HttpTransportOptions) {
    this.baseUrl = options.baseUrl.replace(/\/$/, "");
    this.enabled = options.enabled ?? true;
    this.token = options.token;
  }

  send(event: WireEvent): void {
    if (!this.enabled) {
      return;
    }
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) {
      headers["X-Collector-Token"] = this.token;
    }
    fetch(this.baseUrl + event.route, {
      method: "POST",
      headers,
      body: event.body,
      keepalive: true,
    }).catch(() => undefined);
  }
}

/** Collects events instead of sending them; used by tests and replays. */
export class MemoryTransport implements Transport {
  readonly events: WireEvent[] = [];

  send(event: WireEvent): void {
    this.events.push(event);
  }
}
