import pytest

from browsetel import events as ev
from browsetel.store import (
    DATASET_FILES,
    EventFilter,
    FileStore,
    MalformedLine,
    MemoryStore,
    export_dataset,
    import_dataset,
)

from conftest import browsing_event, session_event, window_event


def _sample_records():
    return [
        session_event(ev.EV_SESSION_START, time=100, session_id=1),
        window_event(ev.EV_WINDOW_OPEN, time=100, session_id=1),
        browsing_event(ev.EV_PAGE_LOADED, load_id=5, cause=1, time=200, session_id=1),
        browsing_event(ev.EV_PAGE_UNLOADED, load_id=5, url=None, time=900, session_id=1),
        session_event(ev.EV_SESSION_END, time=1000, session_id=1),
        session_event(ev.EV_SESSION_START, time=400, session_id=2, user_id=8),
        session_event(ev.EV_SESSION_END, time=800, session_id=2, user_id=8),
    ]


def test_read_your_write():
    store = MemoryStore()
    record = session_event(ev.EV_SESSION_START, session_id=42)
    store.append(record)
    assert store.query(EventFilter(session_id=42)) == [record]


def test_duplicates_are_both_retained():
    store = MemoryStore()
    record = session_event(ev.EV_SESSION_START)
    store.append(record)
    store.append(record)
    assert store.count() == 2
    assert store.query() == [record, record]


def test_query_filters():
    store = MemoryStore()
    for record in _sample_records():
        store.append(record)
    assert len(store.query(EventFilter(session_id=1))) == 5
    assert len(store.query(EventFilter(user_id=8))) == 2
    assert len(store.query(EventFilter(family="browsing"))) == 2
    assert len(store.query(EventFilter(start=100, end=401))) == 4
    assert store.query(EventFilter(session_id=999)) == []


def test_query_sorted_by_time_stable():
    store = MemoryStore()
    first = session_event(ev.EV_USER_INACTIVE, time=500, session_id=1)
    second = session_event(ev.EV_USER_ACTIVE, time=500, session_id=1)
    store.append(first)
    store.append(second)
    assert store.query(EventFilter(family="session")) == [first, second]


def test_time_range_validation():
    with pytest.raises(ValueError):
        EventFilter(start=10, end=5)
    with pytest.raises(ValueError):
        EventFilter(family="bogus")


def test_empty_store_queries_empty():
    assert MemoryStore().query() == []


def test_file_store_survives_restart(tmp_path):
    with FileStore(tmp_path / "data") as store:
        for record in _sample_records()[:3]:
            store.append(record)
    reopened = FileStore(tmp_path / "data")
    assert reopened.count() == 3
    assert reopened.query() == MemoryStoreWith(_sample_records()[:3]).query()
    reopened.close()


def MemoryStoreWith(records):
    store = MemoryStore()
    for record in records:
        store.append(record)
    return store


def test_export_import_round_trip(tmp_path):
    store = MemoryStoreWith(_sample_records())
    export_dataset(store, tmp_path / "dataset")
    replica = MemoryStore()
    added = import_dataset(replica, tmp_path / "dataset")
    assert added == store.count()
    assert replica.query() == store.query()


def test_export_of_empty_store_writes_three_empty_files(tmp_path):
    export_dataset(MemoryStore(), tmp_path / "empty")
    for filename in DATASET_FILES.values():
        path = tmp_path / "empty" / filename
        assert path.exists()
        assert path.read_bytes() == b""


def test_import_aborts_on_corrupt_line(tmp_path):
    store = MemoryStoreWith(_sample_records())
    export_dataset(store, tmp_path / "dataset")
    target = tmp_path / "dataset" / "session.jsonl"
    lines = target.read_bytes().splitlines()
    lines.insert(2, b'{"event_id": 200, "broken": tru')
    target.write_bytes(b"\n".join(lines) + b"\n")

    replica = MemoryStore()
    with pytest.raises(MalformedLine) as excinfo:
        import_dataset(replica, tmp_path / "dataset")
    assert excinfo.value.line_number == 3
    assert "session.jsonl" in excinfo.value.path
    assert replica.count() == 0  # nothing partially imported


def test_import_rejects_family_mismatch(tmp_path):
    store = MemoryStoreWith(_sample_records())
    export_dataset(store, tmp_path / "dataset")
    window_file = tmp_path / "dataset" / "window.jsonl"
    session_line = (tmp_path / "dataset" / "session.jsonl").read_bytes().splitlines()[0]
    window_file.write_bytes(window_file.read_bytes() + session_line + b"\n")
    with pytest.raises(MalformedLine):
        import_dataset(MemoryStore(), tmp_path / "dataset")


def test_import_missing_file(tmp_path):
    (tmp_path / "dataset").mkdir()
    with pytest.raises(MalformedLine):
        import_dataset(MemoryStore(), tmp_path / "dataset")
