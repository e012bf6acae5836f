/**
 * Event constants and the canonical wire encoding.
 *
 * One compact JSON object per event, keys in a pinned order (core attributes,
 * event_id, then family-specific fields), optional keys omitted entirely.
 * Key order matters: the collector-side codec emits the same order, and wire
 * parity is verified byte for byte.
 */

import type { UrlDigest } from "./urls.js";

export const EV_WINDOW_OPEN = 100;
export const EV_WINDOW_CLOSE = 101;
export const EV_TAB_OPEN = 110;
export const EV_TAB_CLOSE = 111;
export const EV_WINDOW_STATE = 140;
export const EV_FOCUS_LOST = 150;
export const EV_FOCUS_GAINED = 151;

export const EV_SESSION_START = 200;
export const EV_SESSION_END = 201;
export const EV_USER_INACTIVE = 210;
export const EV_USER_ACTIVE = 211;
export const EV_LOGGING_OFF = 220;
export const EV_LOGGING_ON = 221;
export const EV_PRIVATE_ON = 230;
export const EV_PRIVATE_OFF = 231;

export const EV_PAGE_LOADED = 400;
export const EV_PAGE_UNLOADED = 410;
export const EV_PAGE_VISIBLE = 420;
export const EV_PAGE_HIDDEN = 430;

export const STATE_MAXIMIZED = 1;
export const STATE_MINIMIZED = 2;
export const STATE_NORMAL = 3;
export const STATE_FULLSCREEN = 4;

export const CAUSE_BECAME_VISIBLE_LOAD = 10;
export const CAUSE_TAB_SELECTED = 11;

export const ROUTE_WINDOW = "/log/window";
export const ROUTE_SESSION = "/log/session";
export const ROUTE_BROWSING = "/log/browsing";

export interface CoreFields {
  time: number;
  tzOffset: number;
  userId: number;
  windowId: number;
  sessionId: number;
  tabId: number;
}

export interface WireEvent {
  route: string;
  body: string;
}

function coreObject(core: CoreFields, eventId: number): Record<string, number> {
  return {
    time: core.time,
    tz_offset: core.tzOffset,
    user_id: core.userId,
    window_id: core.windowId,
    session_id: core.sessionId,
    tab_id: core.tabId,
    event_id: eventId,
  };
}

export function windowEvent(core: CoreFields, eventId: number, windowState?: number): WireEvent {
  const payload: Record<string, number> = coreObject(core, eventId);
  if (windowState !== undefined) {
    payload.window_state = windowState;
  }
  return { route: ROUTE_WINDOW, body: JSON.stringify(payload) };
}

export function sessionEvent(core: CoreFields, eventId: number): WireEvent {
  return { route: ROUTE_SESSION, body: JSON.stringify(coreObject(core, eventId)) };
}

export interface BrowsingFields {
  loadId?: number;
  focusId?: number;
  cause?: number;
  url?: UrlDigest;
}

export function browsingEvent(core: CoreFields, eventId: number, fields: BrowsingFields): WireEvent {
  const payload: Record<string, number | string> = coreObject(core, eventId);
  if (fields.loadId !== undefined) {
    payload.load_id = fields.loadId;
  }
  if (fields.focusId !== undefined) {
    payload.focus_id = fields.focusId;
  }
  if (fields.cause !== undefined) {
    payload.cause = fields.cause;
  }
  if (fields.url !== undefined) {
    payload.url_domain = fields.url.domain;
    payload.url_subdomain = fields.url.subdomain;
    payload.url_path = fields.url.path;
    payload.url_full = fields.url.full;
  }
  return { route: ROUTE_BROWSING, body: JSON.stringify(payload) };
}
