/**
 * Capture client: consumes abstract browser callbacks and emits wire events.
 *
 * The emission rules are a contract shared with the collector-side simulator
 * and verified byte for byte against its golden streams:
 *
 *  - A window open emits 150 for the previously focused window, then the
 *    session bracket 200 and 100 at the same millisecond. New windows are
 *    born focused (no 151).
 *  - A window close emits 430 for the visible page, 410 per open page in tab
 *    order, 101, 201, then 151 for the window inheriting desktop focus.
 *  - Navigation emits 430/410 for the replaced page, 400 (load_id allocated
 *    before focus_id), then 420 cause 10 when the tab is active.
 *  - Tab open emits 110 before hiding the previously visible page, so the
 *    originating page is still visible at tab-open time.
 *  - Tab close emits 430/410, 111, then 420 cause 11 for the neighbor tab.
 *  - Suspend and private mode end every open session (220/230 then 201,
 *    oldest window first); resuming starts fresh sessions (200 then 221/231,
 *    plus a synchronizing 150 for unfocused windows and 210 while the user
 *    is observably inactive). While off, nothing is emitted, and pages
 *    loaded unlogged never emit unloads or visibility changes later.
 *  - 210 fires exactly idleMs after the last user action; 211 fires at the
 *    next pollMs tick at or after activity resumes. Timers fire before
 *    same-millisecond callbacks.
 *
 * No plaintext URL leaves this module: navigation callbacks carry the URL,
 * the outgoing event carries its four level digests.
 */

import {
  CAUSE_BECAME_VISIBLE_LOAD,
  CAUSE_TAB_SELECTED,
  CoreFields,
  EV_FOCUS_GAINED,
  EV_FOCUS_LOST,
  EV_LOGGING_OFF,
  EV_LOGGING_ON,
  EV_PAGE_HIDDEN,
  EV_PAGE_LOADED,
  EV_PAGE_UNLOADED,
  EV_PAGE_VISIBLE,
  EV_PRIVATE_OFF,
  EV_PRIVATE_ON,
  EV_SESSION_END,
  EV_SESSION_START,
  EV_TAB_CLOSE,
  EV_TAB_OPEN,
  EV_USER_ACTIVE,
  EV_USER_INACTIVE,
  EV_WINDOW_CLOSE,
  EV_WINDOW_OPEN,
  EV_WINDOW_STATE,
  STATE_NORMAL,
  WireEvent,
  browsingEvent,
  sessionEvent,
  windowEvent,
} from "./events.js";
import { PublicSuffixes } from "./psl.js";
import type { Transport } from "./transport.js";
import { decompose, digest } from "./urls.js";

export const POLL_MS = 5_000;
export const IDLE_MS = 60_000;

export type IdKind = "window" | "session" | "load" | "focus";
export type IdAllocator = (kind: IdKind) => number;

/** Shared counter, matching scripted scenarios on the collector side. */
export function sequentialIds(start: number): IdAllocator {
  let next = start;
  return () => next++;
}

/**
 * Random ids for real installs. Capped at 2^53 - 1 so the values survive
 * JSON number round trips everywhere.
 */
export function randomIds(): IdAllocator {
  return () => {
    const parts = new Uint32Array(2);
    crypto.getRandomValues(parts);
    const value = (parts[0] & 0x1fffff) * 0x100000000 + parts[1];
    return value === 0 ? 1 : value;
  };
}

export type AdapterOp =
  | "window_open"
  | "window_close"
  | "tab_open"
  | "tab_close"
  | "tab_activate"
  | "navigate"
  | "focus_window"
  | "blur_all"
  | "window_state"
  | "activity"
  | "logging_off"
  | "logging_on"
  | "private_on"
  | "private_off";

/** One browser callback, timestamped with the client clock (epoch ms). */
export interface AdapterCallback {
  t: number;
  op: AdapterOp;
  window?: string;
  tab?: number;
  url?: string;
  cause?: number;
  state?: number;
  activate?: boolean;
}

/** Pushes timestamped callbacks into a listener, in event-time order. */
export interface BrowserAdapter {
  subscribe(listener: (callback: AdapterCallback) => void): void;
}

const NON_ACTIVITY_OPS: ReadonlySet<AdapterOp> = new Set(["blur_all"]);

interface PageLoad {
  loadId: number | null;
  url: string;
  loggedIn: number | null; // session whose stream carries the 400, if any
}

interface Tab {
  tabId: number;
  load: PageLoad | null;
}

interface Win {
  key: string;
  windowId: number;
  session: number | null;
  tabCounter: number;
  tabs: Map<number, Tab>;
  activeTab: number;
  state: number;
  currentFocus: { focusId: number | null; load: PageLoad } | null;
  unfocusedSince: number | null;
}

type ActivityState = "active" | "inactive" | "resuming";

export interface CaptureClientOptions {
  userId: number; // persisted once at install
  tzOffset: number;
  transport: Transport;
  pslRules: Iterable<string>;
  idAllocator?: IdAllocator;
  pollMs?: number;
  idleMs?: number;
}

export class CaptureClient {
  private readonly userId: number;
  private readonly tzOffset: number;
  private readonly transport: Transport;
  private readonly alloc: IdAllocator;
  private readonly psl: PublicSuffixes;
  private readonly pollMs: number;
  private readonly idleMs: number;

  private windows = new Map<string, Win>();
  private focusMru: string[] = [];
  private focused: string | null = null;
  private loggingEnabled = true;
  private privateMode = false;
  private lastActivity: number | null = null;
  private activityState: ActivityState = "active";
  private resumeAt = 0;
  private lastT: number | null = null;

  constructor(options: CaptureClientOptions) {
    this.userId = options.userId;
    this.tzOffset = options.tzOffset;
    this.transport = options.transport;
    this.alloc = options.idAllocator ?? randomIds();
    this.psl = new PublicSuffixes(options.pslRules);
    this.pollMs = options.pollMs ?? POLL_MS;
    this.idleMs = options.idleMs ?? IDLE_MS;
  }

  attach(adapter: BrowserAdapter): void {
    adapter.subscribe((callback) => this.handleCallback(callback));
  }

  /** Explicit manual controls (a Tools-menu entry in a real extension). */
  suspend(t: number): void {
    this.handleCallback({ t, op: "logging_off" });
  }

  resume(t: number): void {
    this.handleCallback({ t, op: "logging_on" });
  }

  handleCallback(callback: AdapterCallback): void {
    if (this.lastT !== null && callback.t <= this.lastT) {
      throw new Error(`callback times must be strictly increasing (at t=${callback.t})`);
    }
    this.lastT = callback.t;
    this.flushTimers(callback.t);
    if (!NON_ACTIVITY_OPS.has(callback.op)) {
      this.markActivity(callback.t);
    }
    this.dispatch(callback);
  }

  // -- emission helpers

  private core(t: number, win: Win, tabId = 0): CoreFields {
    if (win.session === null) {
      throw new Error("emit without an open session");
    }
    return {
      time: t,
      tzOffset: this.tzOffset,
      userId: this.userId,
      windowId: win.windowId,
      sessionId: win.session,
      tabId,
    };
  }

  private post(event: WireEvent): void {
    this.transport.send(event);
  }

  // -- activity timers

  private sessionsOpen(): Win[] {
    return [...this.windows.values()].filter((win) => win.session !== null);
  }

  private flushTimers(t: number): void {
    for (;;) {
      if (this.activityState === "active" && this.lastActivity !== null) {
        const fire = this.lastActivity + this.idleMs;
        if (fire <= t) {
          for (const win of this.sessionsOpen()) {
            this.post(sessionEvent(this.core(fire, win), EV_USER_INACTIVE));
          }
          this.activityState = "inactive";
          continue;
        }
      } else if (this.activityState === "resuming" && this.resumeAt <= t) {
        for (const win of this.sessionsOpen()) {
          this.post(sessionEvent(this.core(this.resumeAt, win), EV_USER_ACTIVE));
        }
        this.activityState = "active";
        continue;
      }
      break;
    }
  }

  private markActivity(t: number): void {
    // update lastActivity first: the resume may re-arm the idle timer,
    // which must measure from this action
    this.lastActivity = t;
    if (this.activityState === "inactive") {
      this.activityState = "resuming";
      this.resumeAt = Math.ceil(t / this.pollMs) * this.pollMs;
      this.flushTimers(t);
    }
  }

  private observablyInactive(): boolean {
    return this.activityState !== "active";
  }

  // -- desktop focus

  private unfocus(t: number, win: Win): void {
    if (win.unfocusedSince === null) {
      win.unfocusedSince = t;
      if (win.session !== null) {
        this.post(windowEvent(this.core(t, win), EV_FOCUS_LOST));
      }
    }
  }

  private refocus(t: number, win: Win): void {
    if (win.unfocusedSince !== null) {
      win.unfocusedSince = null;
      if (win.session !== null) {
        this.post(windowEvent(this.core(t, win), EV_FOCUS_GAINED));
      }
    }
  }

  // -- page visibility

  private show(t: number, win: Win, tab: Tab, cause: number): void {
    const load = tab.load;
    if (load === null || win.currentFocus !== null) {
      throw new Error("show without a load or while another page is visible");
    }
    if (win.session !== null && load.loggedIn === win.session) {
      const focusId = this.alloc("focus");
      this.post(browsingEvent(this.core(t, win, tab.tabId), EV_PAGE_VISIBLE, { focusId, cause }));
      win.currentFocus = { focusId, load };
    } else {
      win.currentFocus = { focusId: null, load };
    }
  }

  private hide(t: number, win: Win): void {
    if (win.currentFocus === null) {
      return;
    }
    const { focusId, load } = win.currentFocus;
    win.currentFocus = null;
    if (focusId === null || win.session === null) {
      return;
    }
    let tabId = 0;
    for (const tab of win.tabs.values()) {
      if (tab.load === load) {
        tabId = tab.tabId;
        break;
      }
    }
    this.post(browsingEvent(this.core(t, win, tabId), EV_PAGE_HIDDEN, { focusId }));
  }

  private unload(t: number, win: Win, tab: Tab): void {
    const load = tab.load;
    if (load === null) {
      return;
    }
    tab.load = null;
    if (win.session !== null && load.loggedIn === win.session && load.loadId !== null) {
      this.post(browsingEvent(this.core(t, win, tab.tabId), EV_PAGE_UNLOADED, { loadId: load.loadId }));
    }
  }

  // -- session lifecycle

  private openSession(t: number, win: Win, reason: "window_open" | "logging_on" | "private_off"): void {
    win.session = this.alloc("session");
    this.post(sessionEvent(this.core(t, win), EV_SESSION_START));
    if (reason === "window_open") {
      this.post(windowEvent(this.core(t, win), EV_WINDOW_OPEN));
    } else if (reason === "logging_on") {
      this.post(sessionEvent(this.core(t, win), EV_LOGGING_ON));
    } else {
      this.post(sessionEvent(this.core(t, win), EV_PRIVATE_OFF));
    }
    if (this.focused !== win.key) {
      this.post(windowEvent(this.core(t, win), EV_FOCUS_LOST)); // state sync
    }
    if (this.observablyInactive()) {
      this.post(sessionEvent(this.core(t, win), EV_USER_INACTIVE)); // state sync
    }
  }

  private closeSession(t: number, win: Win, reason: "window_close" | "suspend" | "private"): void {
    if (reason === "suspend") {
      this.post(sessionEvent(this.core(t, win), EV_LOGGING_OFF));
    } else if (reason === "private") {
      this.post(sessionEvent(this.core(t, win), EV_PRIVATE_ON));
    }
    this.post(sessionEvent(this.core(t, win), EV_SESSION_END));
    if (win.currentFocus !== null) {
      // the page stays visible across a suspension, but unlogged
      win.currentFocus = { focusId: null, load: win.currentFocus.load };
    }
    win.session = null;
  }

  private loggingActive(): boolean {
    return this.loggingEnabled && !this.privateMode;
  }

  // -- ops

  private dispatch(callback: AdapterCallback): void {
    const t = callback.t;
    switch (callback.op) {
      case "window_open":
        return this.opWindowOpen(t, this.requireKey(callback));
      case "window_close":
        return this.opWindowClose(t, this.requireKey(callback));
      case "tab_open":
        return this.opTabOpen(t, this.requireKey(callback), callback.activate ?? false);
      case "tab_close":
        return this.opTabClose(t, this.requireKey(callback), callback.tab ?? 0);
      case "tab_activate":
        return this.opTabActivate(t, this.requireKey(callback), callback.tab ?? 0);
      case "navigate":
        return this.opNavigate(t, this.requireKey(callback), callback.tab ?? 0,
                               callback.url ?? "", callback.cause ?? 0);
      case "focus_window":
        return this.opFocusWindow(t, this.requireKey(callback));
      case "blur_all":
        return this.opBlurAll(t);
      case "window_state":
        return this.opWindowState(t, this.requireKey(callback), callback.state ?? 0);
      case "activity":
        return; // markActivity already ran
      case "logging_off":
        return this.opLoggingOff(t);
      case "logging_on":
        return this.opLoggingOn(t);
      case "private_on":
        return this.opPrivateOn(t);
      case "private_off":
        return this.opPrivateOff(t);
    }
  }

  private requireKey(callback: AdapterCallback): string {
    if (!callback.window) {
      throw new Error(`callback ${callback.op} needs a window key`);
    }
    return callback.window;
  }

  private requireWindow(key: string): Win {
    const win = this.windows.get(key);
    if (!win) {
      throw new Error(`unknown window ${JSON.stringify(key)}`);
    }
    return win;
  }

  private opWindowOpen(t: number, key: string): void {
    if (this.windows.has(key)) {
      throw new Error(`window ${JSON.stringify(key)} already open`);
    }
    const old = this.focused !== null ? this.windows.get(this.focused) : undefined;
    if (old) {
      this.unfocus(t, old);
    }
    const win: Win = {
      key,
      windowId: this.alloc("window"),
      session: null,
      tabCounter: 1,
      tabs: new Map([[1, { tabId: 1, load: null }]]),
      activeTab: 1,
      state: STATE_NORMAL,
      currentFocus: null,
      unfocusedSince: null,
    };
    this.windows.set(key, win);
    this.focused = key;
    this.focusMru.push(key);
    if (this.loggingActive()) {
      this.openSession(t, win, "window_open");
    }
  }

  private opWindowClose(t: number, key: string): void {
    const win = this.requireWindow(key);
    if (win.session !== null) {
      this.hide(t, win);
      for (const tabId of [...win.tabs.keys()].sort((a, b) => a - b)) {
        this.unload(t, win, win.tabs.get(tabId)!);
      }
      this.post(windowEvent(this.core(t, win), EV_WINDOW_CLOSE));
      this.closeSession(t, win, "window_close");
    }
    this.windows.delete(key);
    this.focusMru = this.focusMru.filter((k) => k !== key);
    if (this.focused === key) {
      this.focused = null;
      const nextKey = this.focusMru[this.focusMru.length - 1];
      if (nextKey !== undefined) {
        this.refocus(t, this.requireWindow(nextKey));
        this.focused = nextKey;
      }
    }
  }

  private opTabOpen(t: number, key: string, activate: boolean): void {
    const win = this.requireWindow(key);
    win.tabCounter += 1;
    const tab: Tab = { tabId: win.tabCounter, load: null };
    win.tabs.set(tab.tabId, tab);
    if (win.session !== null) {
      this.post(windowEvent(this.core(t, win, tab.tabId), EV_TAB_OPEN));
    }
    if (activate) {
      this.hide(t, win);
      win.activeTab = tab.tabId;
    }
  }

  private opTabClose(t: number, key: string, tabId: number): void {
    const win = this.requireWindow(key);
    const tab = win.tabs.get(tabId);
    if (!tab) {
      throw new Error(`tab ${tabId} not open in window ${JSON.stringify(key)}`);
    }
    if (win.tabs.size === 1) {
      throw new Error("closing the last tab closes the window; use window_close");
    }
    const wasActive = win.activeTab === tabId;
    if (wasActive) {
      this.hide(t, win);
    }
    this.unload(t, win, tab);
    win.tabs.delete(tabId);
    if (win.session !== null) {
      this.post(windowEvent(this.core(t, win, tabId), EV_TAB_CLOSE));
    }
    if (wasActive) {
      const remaining = [...win.tabs.keys()];
      const later = remaining.filter((id) => id > tabId);
      win.activeTab = later.length ? Math.min(...later) : Math.max(...remaining);
      const neighbor = win.tabs.get(win.activeTab)!;
      if (neighbor.load !== null) {
        this.show(t, win, neighbor, CAUSE_TAB_SELECTED);
      }
    }
  }

  private opTabActivate(t: number, key: string, tabId: number): void {
    const win = this.requireWindow(key);
    const tab = win.tabs.get(tabId);
    if (!tab) {
      throw new Error(`tab ${tabId} not open in window ${JSON.stringify(key)}`);
    }
    if (win.activeTab === tabId) {
      return;
    }
    this.hide(t, win);
    win.activeTab = tabId;
    if (tab.load !== null) {
      this.show(t, win, tab, CAUSE_TAB_SELECTED);
    }
  }

  private opNavigate(t: number, key: string, tabId: number, url: string, cause: number): void {
    const win = this.requireWindow(key);
    const targetId = tabId || win.activeTab;
    const tab = win.tabs.get(targetId);
    if (!tab) {
      throw new Error(`tab ${targetId} not open in window ${JSON.stringify(key)}`);
    }
    if (!(cause >= 1 && cause <= 9)) {
      throw new Error(`navigate needs a load cause 1..9, got ${cause}`);
    }
    if (tab.load !== null) {
      if (win.activeTab === targetId) {
        this.hide(t, win);
      }
      this.unload(t, win, tab);
    }
    const logged = win.session !== null;
    const loadId = logged ? this.alloc("load") : null;
    const load: PageLoad = { loadId, url, loggedIn: win.session };
    tab.load = load;
    if (logged && loadId !== null) {
      const levels = decompose(url, this.psl);
      this.post(browsingEvent(this.core(t, win, targetId), EV_PAGE_LOADED, {
        loadId,
        cause,
        url: digest(levels),
      }));
    }
    if (win.activeTab === targetId) {
      this.show(t, win, tab, CAUSE_BECAME_VISIBLE_LOAD);
    }
  }

  private opFocusWindow(t: number, key: string): void {
    const win = this.requireWindow(key);
    if (this.focused === key) {
      return;
    }
    const old = this.focused !== null ? this.windows.get(this.focused) : undefined;
    if (old) {
      this.unfocus(t, old);
    }
    this.refocus(t, win);
    this.focused = key;
    this.focusMru = this.focusMru.filter((k) => k !== key);
    this.focusMru.push(key);
  }

  private opBlurAll(t: number): void {
    const old = this.focused !== null ? this.windows.get(this.focused) : undefined;
    if (!old) {
      return;
    }
    this.unfocus(t, old);
    this.focused = null;
  }

  private opWindowState(t: number, key: string, state: number): void {
    const win = this.requireWindow(key);
    if (!(state >= 1 && state <= 4)) {
      throw new Error(`window_state needs a state 1..4, got ${state}`);
    }
    if (state === win.state) {
      return;
    }
    win.state = state;
    if (win.session !== null) {
      this.post(windowEvent(this.core(t, win), EV_WINDOW_STATE, state));
    }
  }

  private opLoggingOff(t: number): void {
    if (!this.loggingEnabled) {
      return; // suspending twice emits once
    }
    this.loggingEnabled = false;
    if (!this.privateMode) {
      for (const win of this.sessionsOpen()) {
        this.closeSession(t, win, "suspend");
      }
    }
  }

  private opLoggingOn(t: number): void {
    if (this.loggingEnabled) {
      return;
    }
    this.loggingEnabled = true;
    if (!this.privateMode) {
      for (const win of this.windows.values()) {
        this.openSession(t, win, "logging_on");
      }
    }
  }

  private opPrivateOn(t: number): void {
    if (this.privateMode) {
      return;
    }
    this.privateMode = true;
    if (this.loggingEnabled) {
      for (const win of this.sessionsOpen()) {
        this.closeSession(t, win, "private");
      }
    }
  }

  private opPrivateOff(t: number): void {
    if (!this.privateMode) {
      return;
    }
    this.privateMode = false;
    if (this.loggingEnabled) {
      for (const win of this.windows.values()) {
        this.openSession(t, win, "private_off");
      }
    }
  }
}
