import copy

import pytest

from memir.atoms import ClaimAtom, HandleAtom, PivotAtom, SpanAtom, TimeAtom
from memir.config import get_profile
from memir.engine import Engine, ablate_store, validate_trace
from memir.evaluation import load_queries
from memir.providers.base import Answer, InsufficientEvidence
from memir.store import check_invariants

from conftest import FIXTURE_QUERIES

QUERIES = load_queries(FIXTURE_QUERIES)
PROFILE = get_profile("locomo_default")


@pytest.fixture(scope="module")
def engine(fixture_store, providers):
    return Engine(fixture_store, providers, PROFILE)


@pytest.mark.parametrize("q", QUERIES, ids=[q.id for q in QUERIES])
def test_trace_is_consistent(engine, q):
    assert validate_trace(engine.query(q.question).trace) == []


@pytest.mark.parametrize("q", [q for q in QUERIES if q.gold_claim_ids], ids=lambda q: q.id)
def test_gold_claim_is_selected_direct(engine, q):
    result = engine.query(q.question)
    direct = [r.claim_id for r in result.fact_interface.records if r.role == "direct"]
    assert set(q.gold_claim_ids) <= set(direct)
    assert isinstance(result.outcome, Answer)


@pytest.mark.parametrize("q", [q for q in QUERIES if not q.gold_claim_ids], ids=lambda q: q.id)
def test_absent_fact_is_insufficient(engine, q):
    result = engine.query(q.question)
    assert isinstance(result.outcome, InsufficientEvidence)
    assert not result.fact_interface.sufficiency_flag


def test_when_question_answer_carries_time(engine):
    result = engine.query("What time is the meeting on Friday?")
    assert "4 PM" in result.outcome.text


def test_compose_false_skips_outcome(engine):
    result = engine.query(QUERIES[0].question, compose=False)
    assert result.outcome is None
    assert result.trace[-1] == {"record": "outcome", "kind": "not_composed"}


def test_validator_flags_tampered_trace(engine):
    trace = engine.query(QUERIES[1].question).trace
    bad = copy.deepcopy(trace)
    fused = next(r for r in bad if r["record"] == "fused")
    fused["hits"][0]["s_ret"] += 1e-6
    assert any("s_ret" in p for p in validate_trace(bad))

    bad = copy.deepcopy(trace)
    sel = next(r for r in bad if r["record"] == "selection")
    sel["selected"] = sel["selected"] + sel["selected"][:1]
    assert any("duplicates" in p for p in validate_trace(bad))

    bad = copy.deepcopy(trace)
    next(r for r in bad if r["record"] == "fact_interface")["sufficiency"] = False
    assert any("sufficiency" in p for p in validate_trace(bad))

    assert validate_trace([]) != []


def test_no_cues_store_has_no_cues(fixture_store):
    store = ablate_store(fixture_store, {"no_cues"})
    assert not any(isinstance(a, (HandleAtom, TimeAtom, PivotAtom)) for a in store.atoms.values())
    assert all(c.linked_cue_ids == () for c in store.claims())
    assert len(store.claims()) == len(fixture_store.claims())
    assert check_invariants(store) == []
    assert {v.view_kind for v in store.views} <= {"claim_text", "span_text", "span_context"}


def test_no_claims_store_has_no_claims(fixture_store):
    store = ablate_store(fixture_store, {"no_claims"})
    assert store.claims() == []
    assert check_invariants(store) == []


def test_ablation_leaves_source_untouched(fixture_store):
    before = len(fixture_store)
    ablate_store(fixture_store, {"no_cues", "no_claims"})
    assert len(fixture_store) == before
    assert ablate_store(fixture_store, {"no_bundles"}) is fixture_store


def test_no_claims_bundles_are_span_headed(fixture_store, providers):
    engine = Engine(fixture_store, providers, PROFILE.with_ablations(["no_claims"]))
    result = engine.query(QUERIES[1].question)
    assert result.projection.bundles
    for b in result.projection.bundles:
        assert not b.is_claim
        assert isinstance(engine.store.get(b.claim_id), SpanAtom)
    assert validate_trace(result.trace) == []


def test_no_projection_bundles_each_hit(fixture_store, providers):
    engine = Engine(fixture_store, providers, PROFILE.with_ablations(["no_projection"]))
    result = engine.query(QUERIES[1].question)
    fused = next(r for r in result.trace if r["record"] == "fused")["hits"]
    assert len(result.projection.bundles) == len(fused)
    assert all(len(b.member_hits) == 1 for b in result.projection.bundles)
    assert validate_trace(result.trace) == []


def test_no_bundles_records_are_flat(fixture_store, providers):
    engine = Engine(fixture_store, providers, PROFILE.with_ablations(["no_bundles"]))
    result = engine.query(QUERIES[1].question)
    assert result.fact_interface.records
    for r in result.fact_interface.records:
        assert r.provenance == () and r.temporal_cues == ()
        assert isinstance(engine.store.get(r.claim_id), ClaimAtom)
    assert "EVIDENCE" not in result.fact_interface.render()


def test_queries_are_deterministic(fixture_store, providers):
    a = Engine(fixture_store, providers, PROFILE)
    b = Engine(fixture_store, providers, PROFILE)
    for q in QUERIES:
        assert a.query(q.question).trace == b.query(q.question).trace


def test_with_profile_rebuilds(engine):
    other = engine.with_profile(get_profile("beam_default"))
    assert other.profile.name == "beam_default"
    assert next(r for r in other.query("hi").trace if r["record"] == "query")["select_budget_x"] == 10


def test_empty_question(engine):
    result = engine.query("")
    assert validate_trace(result.trace) == []
    assert isinstance(result.outcome, InsufficientEvidence)
