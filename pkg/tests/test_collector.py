import http.client
import json

import pytest

from browsetel import events as ev
from browsetel.collector import CollectorServer, CollectorService, IdRegistry
from browsetel.store import EventFilter, MemoryStore

from conftest import browsing_event, session_event


@pytest.fixture
def service():
    return CollectorService(MemoryStore())


class TestHandlePost:
    def test_valid_session_event_accepted(self, service):
        body = ev.encode(session_event(ev.EV_SESSION_START))
        assert service.handle_post("/log/session", body) == 204
        assert service.store.count() == 1

    def test_family_mismatch_is_conflict(self, service):
        body = ev.encode(browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1))
        assert service.handle_post("/log/window", body) == 409
        assert service.store.count() == 0

    def test_invalid_cause_rejected(self, service):
        payload = json.loads(ev.encode(browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1)))
        payload["cause"] = 12
        assert service.handle_post("/log/browsing", json.dumps(payload).encode()) == 400

    def test_malformed_payload_rejected(self, service):
        assert service.handle_post("/log/session", b"{nope") == 400

    def test_unknown_route(self, service):
        assert service.handle_post("/log/other", b"{}") == 404

    def test_accepted_event_queryable_exactly_once(self, service):
        record = session_event(ev.EV_SESSION_START, user_id=3, session_id=9)
        service.handle_post("/log/session", ev.encode(record))
        results = service.store.query(EventFilter(user_id=3, session_id=9))
        assert results == [record]

    def test_ingest_registers_ids(self, service):
        record = session_event(ev.EV_SESSION_START, user_id=3, window_id=4, session_id=9)
        service.handle_post("/log/session", ev.encode(record))
        assert service.registry.contains("user", 3)
        assert service.registry.contains("window", 4)
        assert service.registry.contains("session", 9)


class TestIdRegistry:
    def test_consecutive_allocations_distinct(self):
        registry = IdRegistry()
        assert registry.allocate("user") != registry.allocate("user")

    def test_many_allocations_all_distinct_and_registered(self):
        registry = IdRegistry()
        allocated = {registry.allocate("session") for _ in range(10_000)}
        assert len(allocated) == 10_000
        assert registry.count("session") == 10_000
        assert all(registry.contains("session", value) for value in list(allocated)[:100])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            IdRegistry().allocate("tab")

    def test_registry_persists(self, tmp_path):
        registry = IdRegistry(tmp_path)
        value = registry.allocate("user")
        registry.register("window", 77)
        registry.close()
        reopened = IdRegistry(tmp_path)
        assert reopened.contains("user", value)
        assert reopened.contains("window", 77)
        reopened.close()


def _post(host, port, path, body, headers=None):
    conn = http.client.HTTPConnection(host, port, timeout=5)
    conn.request("POST", path, body=body, headers=headers or {})
    response = conn.getresponse()
    data = response.read()
    conn.close()
    return response.status, data


class TestHttpServer:
    def test_post_and_health_over_http(self, service):
        with CollectorServer(service) as server:
            host, port = server.address
            status, _ = _post(host, port, "/log/session",
                              ev.encode(session_event(ev.EV_SESSION_START)))
            assert status == 204
            status, _ = _post(host, port, "/log/window",
                              ev.encode(browsing_event(ev.EV_PAGE_LOADED, load_id=1, cause=1)))
            assert status == 409
            conn = http.client.HTTPConnection(host, port, timeout=5)
            conn.request("GET", "/healthz")
            assert conn.getresponse().status == 200
            conn.close()
        assert service.store.count() == 1

    def test_allocate_endpoint(self, service):
        with CollectorServer(service) as server:
            host, port = server.address
            status, data = _post(host, port, "/allocate/user", b"")
            assert status == 200
            allocated = json.loads(data)["id"]
            assert service.registry.contains("user", allocated)
            status, _ = _post(host, port, "/allocate/tab", b"")
            assert status == 404

    def test_token_required_when_configured(self, service):
        with CollectorServer(service, token="sekrit") as server:
            host, port = server.address
            body = ev.encode(session_event(ev.EV_SESSION_START))
            status, _ = _post(host, port, "/log/session", body)
            assert status == 401
            status, _ = _post(host, port, "/log/session", body,
                              headers={"X-Collector-Token": "sekrit"})
            assert status == 204
