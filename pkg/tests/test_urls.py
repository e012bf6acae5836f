import hashlib
import re

import pytest
from hypothesis import given, strategies as st

from browsetel.urls import (
    InvalidUrl,
    PublicSuffixes,
    decompose,
    default_public_suffixes,
    digest,
    digest_url,
    sha1_hex,
)

# Frozen FIPS 180-1 reference digests (independently checkable with sha1sum).
SHA1_VECTORS = {
    "abc": "a9993e364706816aba3e25717850c26c9cd0d89d",
    "": "da39a3ee5e6b4b0d3255bfef95601890afd80709",
    "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq":
        "84983e441c3bd26ebaae4aa1f95129e5e54670f1",
}


def test_sha1_reference_vectors():
    for text, expected in SHA1_VECTORS.items():
        assert sha1_hex(text) == expected


def test_published_example_decomposition():
    levels = decompose("http://topic.example.org/dir/index.php?id=42")
    assert levels.domain == "example.org"
    assert levels.subdomain == "topic.example.org"
    assert levels.path == "topic.example.org/dir/index.php"
    assert levels.full == "topic.example.org/dir/index.php?id=42"


def test_bare_domain_collapses_levels():
    levels = decompose("http://example.org/")
    assert levels.domain == "example.org"
    assert levels.subdomain == "example.org"
    assert levels.path == "example.org/"
    assert levels.full == "example.org/"


def test_public_suffix_awareness():
    assert decompose("http://a.b.co.uk/p?q=1").domain == "b.co.uk"
    assert decompose("http://www.ck/x").domain == "www.ck"         # exception rule
    assert decompose("http://foo.www.ck/x").domain == "www.ck"     # exception beats *.ck
    assert decompose("http://b.c.mm/x").domain == "b.c.mm"         # wildcard *.mm


def test_host_is_itself_a_suffix_falls_back_to_host():
    assert decompose("http://co.uk/x").domain == "co.uk"


def test_fragment_stripped_everywhere():
    levels = decompose("https://topic.example.org/dir/page?x=1#section-3")
    assert "#" not in levels.full
    assert levels.full == "topic.example.org/dir/page?x=1"


def test_port_userinfo_and_case_stripped():
    levels = decompose("http://user:pw@Topic.Example.ORG:8080/Dir/Page")
    assert levels.subdomain == "topic.example.org"
    assert levels.path == "topic.example.org/Dir/Page"  # path case is preserved


def test_ip_literal_host():
    levels = decompose("http://192.168.1.10/admin")
    assert levels.domain == "192.168.1.10"
    assert levels.subdomain == "192.168.1.10"


@pytest.mark.parametrize("url", [
    "ftp://example.org/file",
    "mailto:someone@example.org",
    "http:///nohost",
    "not a url",
])
def test_invalid_urls_rejected(url):
    with pytest.raises(InvalidUrl):
        decompose(url)


def test_digest_matches_hashlib_per_level():
    levels = decompose("http://topic.example.org/dir/index.php?id=42")
    digests = digest(levels)
    for level_name in ("domain", "subdomain", "path", "full"):
        expected = hashlib.sha1(getattr(levels, level_name).encode()).hexdigest()
        assert digests.for_level(level_name) == expected
        assert re.fullmatch(r"[0-9a-f]{40}", digests.for_level(level_name))


def test_digest_determinism_and_distinctness():
    first = digest_url("http://example.org/a")
    second = digest_url("http://example.org/a")
    other = digest_url("http://example.org/b")
    assert first == second
    assert first.full_hash != other.full_hash
    assert first.domain_hash == other.domain_hash  # same domain, same grouping key


_HOST_LABEL = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=8)
_PATH_SEG = st.text(alphabet="abcdefghijklmnopqrstuvwxyzABC0123456789-_", min_size=1, max_size=10)


@given(
    labels=st.lists(_HOST_LABEL, min_size=2, max_size=4),
    segments=st.lists(_PATH_SEG, min_size=0, max_size=3),
    query=st.one_of(st.none(), _PATH_SEG),
)
def test_level_nesting_invariant(labels, segments, query):
    """domain suffixes subdomain, subdomain prefixes path, path prefixes full."""
    url = "http://" + ".".join(labels) + "/" + "/".join(segments)
    if query is not None:
        url += f"?q={query}"
    levels = decompose(url)
    assert levels.subdomain.endswith(levels.domain)
    assert levels.path.startswith(levels.subdomain)
    assert levels.full.startswith(levels.path)


def test_grouping_by_digest_equals_grouping_by_plaintext():
    urls = [
        "http://a.example.org/1", "http://b.example.org/2", "http://example.org/3",
        "http://shop.b.co.uk/x", "http://b.co.uk/y", "http://other.net/z",
    ]
    by_plain = {}
    by_hash = {}
    for url in urls:
        levels = decompose(url)
        digests = digest(levels)
        by_plain.setdefault(levels.domain, set()).add(url)
        by_hash.setdefault(digests.domain_hash, set()).add(url)
    assert sorted(by_plain.values(), key=sorted) == sorted(by_hash.values(), key=sorted)


def test_custom_rules_snapshot():
    psl = PublicSuffixes(rules=["com", "co.uk", "*.zz", "!exempt.zz"])
    assert psl.registrable_domain("x.y.com") == "y.com"
    assert psl.registrable_domain("a.co.uk") == "a.co.uk"
    assert psl.registrable_domain("host.area.zz") == "host.area.zz"  # *.zz
    assert psl.registrable_domain("sub.exempt.zz") == "exempt.zz"    # exception
    assert psl.registrable_domain("com") is None


def test_snapshot_loads_once():
    assert default_public_suffixes() is default_public_suffixes()
