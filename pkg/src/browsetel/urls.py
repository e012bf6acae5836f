"""URL decomposition into four hierarchy levels and per-level SHA-1 digests.

A URL is reduced to four nested strings before anything is hashed:

    domain     registrable domain (public-suffix aware), e.g. "example.org"
    subdomain  full host, e.g. "topic.example.org"
    path       host plus path, e.g. "topic.example.org/dir/index.php"
    full       host plus path plus query, e.g. "topic.example.org/dir/index.php?id=42"

The scheme, fragment, port, and userinfo never appear at any level; ports and
credentials are deliberately dropped because they risk deanonymization. Each
level is hashed independently (SHA-1, lowercase hex) so events can be grouped
per level without ever storing plaintext.

Registrable-domain extraction uses the Public Suffix List snapshot pinned in
``browsetel/data/public_suffix_list.dat``; the snapshot is part of the repo so
grouping is reproducible regardless of upstream list churn. Hosts are matched
as given (lowercased, trailing dot stripped); no IDNA mapping is applied.

Note on privacy: plain SHA-1 of a low-entropy URL is dictionary-attackable.
There is no salting here by design; the digests are a pure renaming, not a
secrecy mechanism.
"""

from __future__ import annotations

import hashlib
import ipaddress
import re
from dataclasses import dataclass
from importlib import resources
from urllib.parse import urlsplit

HEX40_RE = re.compile(r"^[0-9a-f]{40}$")

URL_LEVELS = ("domain", "subdomain", "path", "full")


class InvalidUrl(ValueError):
    """URL has no host or an unsupported scheme."""


@dataclass(frozen=True, slots=True)
class UrlLevels:
    """The four nested components of one URL, plaintext."""

    domain: str
    subdomain: str
    path: str
    full: str


@dataclass(frozen=True, slots=True)
class UrlDigest:
    """SHA-1 hex digests of the four URL levels."""

    domain_hash: str
    subdomain_hash: str
    path_hash: str
    full_hash: str

    def for_level(self, level: str) -> str:
        if level not in URL_LEVELS:
            raise ValueError(f"unknown URL level: {level!r}")
        return getattr(self, f"{level}_hash")


class PublicSuffixes:
    """Matcher over a Public Suffix List snapshot.

    Implements the publicsuffix.org algorithm: longest matching rule wins,
    ``*.`` rules match exactly one extra label, ``!`` exception rules beat
    everything and shed their leftmost label.
    """

    def __init__(self, rules: "list[str] | None" = None):
        if rules is None:
            rules = _load_snapshot()
        self._exact: set[str] = set()
        self._wildcard_parents: set[str] = set()
        self._exceptions: set[str] = set()
        for rule in rules:
            rule = rule.strip()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self._exceptions.add(rule[1:])
            elif rule.startswith("*."):
                self._wildcard_parents.add(rule[2:])
            else:
                self._exact.add(rule)

    def public_suffix_labels(self, host: str) -> int:
        """Number of labels in the public suffix of `host` (already lowercased)."""
        labels = host.split(".")
        best = 1  # implicit default rule "*"
        for i in range(len(labels)):
            candidate = labels[i:]
            name = ".".join(candidate)
            if name in self._exceptions:
                return len(candidate) - 1
            if name in self._exact:
                best = max(best, len(candidate))
            if len(candidate) >= 2 and ".".join(candidate[1:]) in self._wildcard_parents:
                best = max(best, len(candidate))
        return best

    def registrable_domain(self, host: str) -> str | None:
        """Public suffix plus one label, or None if `host` is itself a suffix."""
        labels = host.split(".")
        n_suffix = self.public_suffix_labels(host)
        if n_suffix >= len(labels):
            return None
        return ".".join(labels[len(labels) - n_suffix - 1 :])


def _load_snapshot() -> list[str]:
    data = resources.files("browsetel").joinpath("data/public_suffix_list.dat")
    return data.read_text(encoding="utf-8").splitlines()


_default_psl: PublicSuffixes | None = None


def default_public_suffixes() -> PublicSuffixes:
    global _default_psl
    if _default_psl is None:
        _default_psl = PublicSuffixes()
    return _default_psl


def _is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        return False


def decompose(url: str, psl: PublicSuffixes | None = None) -> UrlLevels:
    """Split an absolute http(s) URL into its four levels.

    Raises InvalidUrl for non-http(s) schemes or URLs without a host. The
    fragment is dropped at every level; the query survives only at the
    ``full`` level.
    """
    parts = urlsplit(url)
    if parts.scheme.lower() not in ("http", "https"):
        raise InvalidUrl(f"unsupported scheme in {url!r}")
    host = parts.hostname  # lowercased, port and userinfo already stripped
    if not host:
        raise InvalidUrl(f"no host in {url!r}")
    host = host.rstrip(".")
    if not host:
        raise InvalidUrl(f"no host in {url!r}")

    if _is_ip_literal(host):
        domain = host
    else:
        registrable = (psl or default_public_suffixes()).registrable_domain(host)
        # A host that is itself a public suffix has no registrable domain;
        # fall back to the host so the level chain stays nested.
        domain = registrable if registrable is not None else host

    path_level = host + parts.path
    full = path_level + (f"?{parts.query}" if parts.query else "")
    return UrlLevels(domain=domain, subdomain=host, path=path_level, full=full)


def sha1_hex(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def digest(levels: UrlLevels) -> UrlDigest:
    """Hash each level string independently (SHA-1 over UTF-8, lowercase hex)."""
    return UrlDigest(
        domain_hash=sha1_hex(levels.domain),
        subdomain_hash=sha1_hex(levels.subdomain),
        path_hash=sha1_hex(levels.path),
        full_hash=sha1_hex(levels.full),
    )


def digest_url(url: str, psl: PublicSuffixes | None = None) -> UrlDigest:
    return digest(decompose(url, psl))
