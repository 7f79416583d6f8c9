import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memir.atoms import ClaimAtom, SpanAtom
from memir.compiler import (
    CompileConfig,
    CompilationReport,
    InteractionHistory,
    Turn,
    compile_history,
    extract_cues,
    paginate,
    segment_spans,
    write_claims,
)
from memir.errors import EmptyHistory
from memir.persistence import dumps
from memir.providers import CueProposals, reference_providers
from memir.providers.base import PageCues
from memir.store import MemoryStore, check_invariants

from conftest import GOLDEN
from factories import random_history


class Exploding:
    def extract(self, page, spans):
        raise RuntimeError("boom")

    def write(self, page, spans, cues, budget):
        raise RuntimeError("boom")


def _page_store(history):
    store = MemoryStore()
    page = paginate(history)[0]
    store.add_atom(page)
    spans = segment_spans(page)
    store.extend(spans)
    return store, page, spans


def test_fixture_matches_golden_store(fixture_store):
    assert dumps(fixture_store) == (GOLDEN / "fixture_store.jsonl").read_text(encoding="utf-8")


def test_fixture_shape(fixture_store, fixture_result):
    counts = json.loads((GOLDEN / "fixture_counts.json").read_text())
    assert len(fixture_store.pages()) == 3
    for page in fixture_store.pages():
        assert 1 <= len(fixture_store.claims_of(page.id)) <= 12
    kinds = {}
    for atom in fixture_store.atoms.values():
        kinds[atom.kind] = kinds.get(atom.kind, 0) + 1
    assert kinds == counts["atoms"]
    assert fixture_result.report.rejections == []


def test_spans_cover_every_sentence(fixture_store):
    for page in fixture_store.pages():
        spans = [fixture_store.get(s) for s in fixture_store.spans_of(page.id)]
        for slot in page.turn_layout:
            turn_text = page.raw_text[slot.start:slot.end]
            inside = [s for s in spans if slot.start <= s.char_range[0] < slot.end]
            covered = "".join(s.verbatim_text for s in inside)
            assert "".join(covered.split()) == "".join(turn_text.split())


def test_pages_disjoint_and_cover_turns(fixture_store, fixture_history):
    ranges = [p.turn_range for p in fixture_store.pages()]
    assert ranges[0][0] == 0 and ranges[-1][1] == len(fixture_history.turns) - 1
    for (a0, a1), (b0, b1) in zip(ranges, ranges[1:]):
        assert b0 == a1 + 1


def test_empty_history():
    with pytest.raises(EmptyHistory):
        compile_history(InteractionHistory([]), reference_providers())


def test_failing_providers_give_partial_store(fixture_history):
    providers = reference_providers()
    providers.cue_extractor = Exploding()
    providers.claim_writer = Exploding()
    result = compile_history(fixture_history, providers)
    store = result.store
    assert result.report.partial
    assert sorted(result.report.failed_pages) == [str(p.id) for p in store.pages()]
    assert {a.kind for a in store.atoms.values()} == {"page", "span"}
    assert check_invariants(store) == []


def test_page_policies():
    turns = [Turn("", "A", f"Sentence {i}.") for i in range(25)]
    pages = paginate(InteractionHistory(turns))
    assert [p.turn_range for p in pages] == [(0, 9), (10, 19), (20, 24)]
    turns = [Turn(f"s{i // 4}", "A", f"Sentence {i}.") for i in range(12)]
    assert len(paginate(InteractionHistory(turns))) == 3
    pages = paginate(InteractionHistory(turns), CompileConfig(page_policy="fixed_window", window_size=5))
    assert len(pages) == 3


def test_budget_truncates_in_provider_order():
    text = " ".join(f"Ann likes item number {i}." for i in range(15))
    store, page, spans = _page_store(InteractionHistory([Turn("s", "Ann", text)]))
    proposals = [{"claim_text": f"claim {i}", "support_span_ids": [str(s.id)]} for i, s in enumerate(spans)]
    report = CompilationReport()
    claims = write_claims(store, page, PageCues(), proposals, 12, report)
    assert [c.claim_text for c in claims] == [f"claim {i}" for i in range(12)]
    assert report.truncated == {str(page.id): 3}


def test_reference_writer_budget_prefix():
    text = " ".join(f"Ann likes item number {i}." for i in range(15))
    history = InteractionHistory([Turn("s", "Ann", text)])
    store = compile_history(history, reference_providers()).store
    claims = store.claims()
    assert len(claims) == 12
    assert [c.support_span_ids[0].local_ordinal for c in claims] == list(range(12))


def test_cue_validation_rejects_bad_proposals():
    store, page, spans = _page_store(InteractionHistory([Turn("s", "Ann", "We met Bo in Rome. It rained.")]))
    s0 = str(spans[0].id)
    bad = CueProposals(
        handles=[
            {"surface_text": "Bo", "support_span_ids": []},
            {"surface_text": "Bo", "support_span_ids": ["S9:00"]},
            {"surface_text": "Paris", "support_span_ids": [s0]},
            {"surface_text": "Bo", "support_span_ids": [str(page.id)]},
            {"surface_text": "Rome", "support_span_ids": [s0]},
        ],
        times=[{"surface_text": "rained", "support_span_ids": [str(spans[1].id)]}],
        pivots=[{"referent_label": "x", "support_text": "nope", "support_span_ids": [s0]}],
    )
    report = CompilationReport()
    cues = extract_cues(store, page, spans, bad, report)
    assert [h.surface_text for h in cues.handles] == ["Rome"]
    assert cues.times == () and cues.pivots == ()
    reasons = [r.reason.split(":")[0] for r in report.rejections]
    assert reasons.count("SupportViolation") == 2
    assert "DanglingReference" in reasons and "InvalidAtom" in reasons


def test_view_targets_match_membership(fixture_store):
    for view in fixture_store.views:
        expected = sorted(
            c.id
            for c in fixture_store.claims()
            if view.owner_atom_id == c.id or view.owner_atom_id in fixture_store.association_set(c.id)
        )
        assert list(view.target_claim_ids) == expected


def test_views_only_expose_owner_content(fixture_store):
    for view in fixture_store.views:
        owner = fixture_store.get(view.owner_atom_id)
        if view.view_kind == "span_context":
            siblings = [fixture_store.get(s).verbatim_text for s in fixture_store.spans_of(owner.page_id)]
            assert all(part in " ".join(siblings) for part in view.key_text.split(" "))
        elif view.view_kind == "time_key":
            assert view.key_text.startswith(owner.surface_text)
        else:
            text = getattr(owner, "claim_text", None) or getattr(owner, "verbatim_text", None) or getattr(
                owner, "surface_text", None
            ) or owner.referent_label
            assert view.key_text == text


def test_compilation_is_deterministic(fixture_history, fixture_store):
    again = compile_history(fixture_history, reference_providers())
    assert dumps(again.store) == dumps(fixture_store)


def test_concurrent_workers_match_sequential(fixture_history, fixture_store):
    again = compile_history(fixture_history, reference_providers(), workers=4)
    assert dumps(again.store) == dumps(fixture_store)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_reference_providers_never_rejected(seed):
    history = random_history(random.Random(seed), pages=3)
    result = compile_history(history, reference_providers())
    assert [r for r in result.report.rejections if not r.reason.startswith("BudgetTruncated")] == []
    assert check_invariants(result.store) == []


def test_claims_only_cite_spans(fixture_store):
    for claim in fixture_store.iter_kind(ClaimAtom):
        assert 1 <= len(claim.support_span_ids) <= 3
        assert all(isinstance(fixture_store.get(s), SpanAtom) for s in claim.support_span_ids)
        assert any(s.page_ordinal == claim.id.page_ordinal for s in claim.support_span_ids)
