import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memir.errors import CorruptRecord, VersionMismatch
from memir.persistence import FORMAT_VERSION, dumps, load, loads, persist
from memir.store import MemoryStore

from factories import random_store


def test_empty_store_is_header_only(tmp_path):
    path = persist(MemoryStore({"conversation_id": "x"}), tmp_path / "s.jsonl")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    header = json.loads(lines[0])
    assert header["format_version"] == FORMAT_VERSION == 1
    assert header["conversation_meta"] == {"conversation_id": "x"}
    assert load(path) == MemoryStore({"conversation_id": "x"})


def test_fixture_store_round_trip(tmp_path, fixture_store):
    path = persist(fixture_store, tmp_path / "s.jsonl")
    again = load(path)
    assert again == fixture_store
    assert dumps(again) == path.read_text(encoding="utf-8")
    assert again.association_sets == fixture_store.association_sets


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_random_store_round_trip(seed):
    store = random_store(random.Random(seed), max_atoms=50)
    text = dumps(store)
    assert loads(text) == store
    assert dumps(loads(text)) == text


def _lines(store):
    return dumps(store).splitlines()


def test_missing_support_span_is_corrupt(fixture_store):
    lines = _lines(fixture_store)
    claim = next(json.loads(l) for l in lines if '"kind":"claim"' in l)
    span_id = claim["support_span_ids"][0]
    kept = [l for l in lines if f'"id":"{span_id}"' not in l]
    with pytest.raises(CorruptRecord) as err:
        loads("\n".join(kept) + "\n")
    assert err.value.line > 1


def test_bad_json_line_number(fixture_store):
    lines = _lines(fixture_store)
    lines[3] = "{not json"
    with pytest.raises(CorruptRecord) as err:
        loads("\n".join(lines))
    assert err.value.line == 4


def test_schema_violation_line_number(fixture_store):
    lines = _lines(fixture_store)
    rec = json.loads(lines[2])
    del rec["id"]
    lines[2] = json.dumps(rec)
    with pytest.raises(CorruptRecord) as err:
        loads("\n".join(lines))
    assert err.value.line == 3


def test_version_mismatch(fixture_store):
    lines = _lines(fixture_store)
    header = json.loads(lines[0])
    header["format_version"] = 99
    lines[0] = json.dumps(header)
    with pytest.raises(VersionMismatch):
        loads("\n".join(lines))
