import pytest
from fastapi.testclient import TestClient

from memir.service import create_app

from conftest import FIXTURE_CORPUS, FIXTURE_QUERIES


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def store_path(client, tmp_path_factory):
    out = tmp_path_factory.mktemp("svc") / "fixture.store.jsonl"
    resp = client.post("/ingest", json={"corpus_path": str(FIXTURE_CORPUS), "out_path": str(out)})
    assert resp.status_code == 200, resp.text
    return out


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_ingest_summary(client, store_path, tmp_path):
    resp = client.post("/ingest", json={"corpus_path": str(FIXTURE_CORPUS), "out_path": str(tmp_path / "s.jsonl")})
    body = resp.json()
    assert body["turns"] == 30
    assert body["atoms"]["page"] == 3 and body["atoms"]["claim"] == 33
    assert not body["partial"]
    assert (tmp_path / "s.jsonl").read_bytes() == store_path.read_bytes()


def test_query(client, store_path):
    resp = client.post("/query", json={"store_path": str(store_path), "question": "What is the name of Nate's turtle?"})
    body = resp.json()
    assert resp.status_code == 200
    assert body["sufficiency"] is True
    assert body["outcome"]["kind"] == "answer"
    assert body["rendered"].startswith("QUERY: What is the name of Nate's turtle?\n")
    assert body["trace"] is None


def test_query_insufficient(client, store_path):
    body = client.post("/query", json={"store_path": str(store_path), "question": "What is the name of Joanna's dog?"}).json()
    assert body["outcome"]["kind"] == "insufficient_evidence"


def test_trace_endpoint(client, store_path):
    body = client.post("/trace", json={"store_path": str(store_path), "question": "Who is Joanna's violin teacher?", "ablate": "no_cues"}).json()
    kinds = [r["record"] for r in body["trace"]]
    assert kinds[0] == "query" and kinds[-1] == "outcome"
    assert body["trace"][0]["ablations"] == ["no_cues"]


def test_eval_endpoint(client, store_path):
    body = client.post(
        "/eval", json={"store_path": str(store_path), "queries_path": str(FIXTURE_QUERIES), "ablate": "no_claims"}
    ).json()
    variants = [r["variant"] for r in body["records"] if r["record"] == "summary"]
    assert variants == ["full", "no_claims"]
    assert body["table"].splitlines()[1].split()[0] == "full"


@pytest.mark.parametrize(
    "endpoint,payload",
    [
        ("/query", {"store_path": "/nonexistent/store.jsonl", "question": "q"}),
        ("/query", {"store_path": "{store}", "question": "q", "profile": "nope"}),
        ("/query", {"store_path": "{store}", "question": "q", "ablate": "no_everything"}),
        ("/query", {"store_path": "{store}", "question": "q", "config_text": "utilization.pool_m = x"}),
        ("/ingest", {"corpus_path": "/nonexistent.jsonl", "out_path": "/tmp/x.jsonl"}),
    ],
)
def test_input_errors_are_400(client, store_path, endpoint, payload):
    payload = {k: (str(store_path) if v == "{store}" else v) for k, v in payload.items()}
    resp = client.post(endpoint, json=payload)
    assert resp.status_code == 400
    assert set(resp.json()) == {"error", "message"}


def test_missing_field_is_422(client):
    assert client.post("/query", json={"question": "q"}).status_code == 422
