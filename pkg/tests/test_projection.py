import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memir.atoms import AtomId, ClaimAtom, HandleAtom
from memir.errors import UnknownId
from memir.projection import build_bundles, project_hit, span_bundles, unprojected_bundles
from memir.retrieval import FusedHit

import oracles
from factories import random_fused, random_store


def _h(atom, s):
    return FusedHit(AtomId.parse(atom), s, {})


def test_claim_hit_projects_to_itself(fixture_store):
    assert project_hit(_h("C0:03", 0.1), fixture_store) == {AtomId.parse("C0:03")}


def test_shared_span_projects_to_all_claims(fixture_store):
    claims = [c for c in fixture_store.claims() if c.id.page_ordinal == 0][:2]
    store = fixture_store
    for span_id in claims[0].support_span_ids:
        assert project_hit(_h(str(span_id), 0.1), store) == oracles.projection(store, span_id)


def test_unlinked_handle_is_discarded():
    store = random_store(random.Random(11), pages=1, claims_per_page=(1, 1), cues_per_page=(0, 0))
    span = store.spans_of(AtomId("P", 0, 0))[0]
    orphan = HandleAtom(AtomId("H", 0, 0), store.get(span).verbatim_text.split()[0], (span,))
    store.add_atom(orphan)
    assert project_hit(FusedHit(orphan.id, 0.1, {}), store) == frozenset()
    result = build_bundles([FusedHit(orphan.id, 0.1, {})], store)
    assert result.bundles == [] and [h.atom_id for h in result.discarded] == [orphan.id]


def test_unknown_atom(fixture_store):
    with pytest.raises(UnknownId):
        project_hit(_h("C9:00", 0.1), fixture_store)


def test_single_direct_hit(fixture_store):
    cid = AtomId.parse("C0:05")
    [bundle] = build_bundles([FusedHit(cid, 0.25, {})], fixture_store).bundles
    assert bundle.rho == 0.25
    assert bundle.closure == {cid} | fixture_store.association_set(cid)


def test_direct_plus_support_span_sum(fixture_store):
    claim = fixture_store.get(AtomId.parse("C0:05"))
    span = claim.support_span_ids[0]
    bundles = build_bundles([_h("C0:05", 0.03), FusedHit(span, 0.02, {})], fixture_store).bundles
    head = next(b for b in bundles if b.claim_id == claim.id)
    assert head.rho == pytest.approx(0.05, abs=1e-12)


def test_shared_span_counts_fully_for_each_claim():
    store = random_store(random.Random(3), pages=1, claims_per_page=(6, 6))
    by_span = {}
    for c in store.claims():
        for s in c.support_span_ids:
            by_span.setdefault(s, []).append(c.id)
    span, owners = next((s, cs) for s, cs in by_span.items() if len(cs) >= 2)
    bundles = build_bundles([FusedHit(span, 0.04, {})], store).bundles
    assert {b.claim_id for b in bundles} == set(owners)
    assert all(b.rho == 0.04 for b in bundles)


def test_bundles_sorted_and_headed_by_claims(fixture_store):
    fused = random_fused(random.Random(5), fixture_store)
    bundles = build_bundles(fused, fixture_store).bundles
    assert bundles == sorted(bundles, key=lambda b: (-b.rho, b.claim_id))
    assert all(isinstance(fixture_store.get(b.claim_id), ClaimAtom) for b in bundles)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_bundles_match_oracle(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    fused = random_fused(rng, store)
    result = build_bundles(fused, store)
    expected = oracles.bundles(store, fused)
    assert {b.claim_id for b in result.bundles} == set(expected)
    for b in result.bundles:
        rho, closure, members = expected[b.claim_id]
        assert abs(b.rho - rho) <= 1e-12
        assert b.closure == closure
        assert {h.atom_id for h in b.member_hits} == members
        assert set(store.get(b.claim_id).support_span_ids) <= b.closure
    discarded = {h.atom_id for h in result.discarded}
    assert discarded == {h.atom_id for h in fused if not oracles.projection(store, h.atom_id)}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_adding_a_hit_never_lowers_rho(seed):
    rng = random.Random(seed)
    store = random_store(rng)
    fused = random_fused(rng, store, max_hits=30)
    before = {b.claim_id: b.rho for b in build_bundles(fused, store).bundles}
    used = {h.atom_id for h in fused}
    extra = [i for i in store.atoms if i.kind_tag != "P" and i not in used]
    if not extra:
        return
    after = {b.claim_id: b.rho for b in build_bundles(fused + [FusedHit(rng.choice(extra), 0.01, {})], store).bundles}
    for claim, rho in before.items():
        assert after[claim] >= rho


def test_ablation_bundles(fixture_store):
    fused = [_h("S0:04", 0.03), _h("V0:00", 0.02), _h("C0:03", 0.01)]
    flat = unprojected_bundles(fused, fixture_store).bundles
    assert [(str(b.claim_id), b.is_claim, b.closure) for b in flat] == [
        ("S0:04", False, {AtomId.parse("S0:04")}),
        ("V0:00", False, {AtomId.parse("V0:00")}),
        ("C0:03", True, {AtomId.parse("C0:03")}),
    ]
    spans = span_bundles(fused[:2], fixture_store).bundles
    assert [(str(b.claim_id), b.is_claim) for b in spans] == [("S0:04", False)]
    assert spans[0].rho == pytest.approx(0.05)
