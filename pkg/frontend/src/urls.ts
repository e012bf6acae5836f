/**
 * URL decomposition into the four hierarchy levels, plus per-level SHA-1.
 *
 * The splitting is implemented by hand (not via the WHATWG URL class) so the
 * level strings are byte-identical to the collector side for any input: the
 * WHATWG parser normalizes empty paths to "/", resolves dot segments, and
 * re-encodes, all of which would change the digests. Conformance is locked
 * by the url_vectors.json fixture generated from the collector-side codec.
 */

import { PublicSuffixes } from "./psl.js";
import { sha1Hex } from "./sha1.js";

export class InvalidUrl extends Error {}

export interface UrlLevels {
  domain: string;
  subdomain: string;
  path: string;
  full: string;
}

export interface UrlDigest {
  domain: string;
  subdomain: string;
  path: string;
  full: string;
}

const SCHEME_RE = /^[a-zA-Z][a-zA-Z0-9+.-]*$/;
const IPV4_OCTET = "(?:0|[1-9][0-9]?|1[0-9]{2}|2[0-4][0-9]|25[0-5])";
const IPV4_RE = new RegExp(`^${IPV4_OCTET}(?:\\.${IPV4_OCTET}){3}$`);

interface SplitUrl {
  scheme: string;
  netloc: string;
  path: string;
  query: string;
}

function splitUrl(url: string): SplitUrl {
  const hashIndex = url.indexOf("#");
  if (hashIndex >= 0) {
    url = url.slice(0, hashIndex);
  }
  const colonIndex = url.indexOf(":");
  if (colonIndex <= 0 || !SCHEME_RE.test(url.slice(0, colonIndex))) {
    throw new InvalidUrl(`unsupported scheme in ${JSON.stringify(url)}`);
  }
  const scheme = url.slice(0, colonIndex).toLowerCase();
  let rest = url.slice(colonIndex + 1);
  let netloc = "";
  if (rest.startsWith("//")) {
    let end = rest.length;
    for (const stop of ["/", "?"]) {
      const index = rest.indexOf(stop, 2);
      if (index >= 0 && index < end) {
        end = index;
      }
    }
    netloc = rest.slice(2, end);
    rest = rest.slice(end);
  }
  let query = "";
  const queryIndex = rest.indexOf("?");
  if (queryIndex >= 0) {
    query = rest.slice(queryIndex + 1);
    rest = rest.slice(0, queryIndex);
  }
  return { scheme, netloc, path: rest, query };
}

function hostnameOf(netloc: string): string {
  const atIndex = netloc.lastIndexOf("@");
  const hostinfo = atIndex >= 0 ? netloc.slice(atIndex + 1) : netloc;
  let hostname: string;
  const bracketIndex = hostinfo.indexOf("[");
  if (bracketIndex >= 0) {
    const closing = hostinfo.indexOf("]");
    hostname = hostinfo.slice(bracketIndex + 1, closing >= 0 ? closing : undefined);
  } else {
    const portIndex = hostinfo.indexOf(":");
    hostname = portIndex >= 0 ? hostinfo.slice(0, portIndex) : hostinfo;
  }
  return hostname.toLowerCase();
}

function isIpLiteral(host: string): boolean {
  return IPV4_RE.test(host) || host.includes(":");
}

export function decompose(url: string, psl: PublicSuffixes): UrlLevels {
  const parts = splitUrl(url);
  if (parts.scheme !== "http" && parts.scheme !== "https") {
    throw new InvalidUrl(`unsupported scheme in ${JSON.stringify(url)}`);
  }
  let host = hostnameOf(parts.netloc);
  host = host.replace(/\.+$/, "");
  if (!host) {
    throw new InvalidUrl(`no host in ${JSON.stringify(url)}`);
  }
  let domain: string;
  if (isIpLiteral(host)) {
    domain = host;
  } else {
    // a host that is itself a public suffix keeps the level chain nested
    domain = psl.registrableDomain(host) ?? host;
  }
  const pathLevel = host + parts.path;
  const full = parts.query ? `${pathLevel}?${parts.query}` : pathLevel;
  return { domain, subdomain: host, path: pathLevel, full };
}

export function digest(levels: UrlLevels): UrlDigest {
  return {
    domain: sha1Hex(levels.domain),
    subdomain: sha1Hex(levels.subdomain),
    path: sha1Hex(levels.path),
    full: sha1Hex(levels.full),
  };
}
