"""Projection of fused hits onto claims and bundle consolidation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from memir.atoms import AtomId, ClaimAtom, sup
from memir.retrieval.fusion import FusedHit
from memir.store import MemoryStore


@dataclass(frozen=True)
class CandidateBundle:
    """A head atom with its aggregated score and provenance closure.

    In the full pipeline the head is always a claim. The no_claims and
    no_projection ablations build bundles headed by other atoms; those
    carry ``is_claim=False`` so the trace shows they are not claims.
    """

    claim_id: AtomId
    rho: float
    closure: frozenset
    member_hits: tuple[FusedHit, ...] = ()
    is_claim: bool = True


@dataclass
class ProjectionResult:
    bundles: list[CandidateBundle]
    discarded: list[FusedHit] = field(default_factory=list)


def project_hit(hit: FusedHit, store: MemoryStore) -> frozenset[AtomId]:
    """Claims whose association set, or own id, contains the hit atom."""
    atom = store.get(hit.atom_id)
    targets = set(store.claims_containing(hit.atom_id))
    if isinstance(atom, ClaimAtom):
        targets.add(atom.id)
    return frozenset(targets)


def order_bundles(bundles: Sequence[CandidateBundle]) -> list[CandidateBundle]:
    return sorted(bundles, key=lambda b: (-b.rho, b.claim_id))


def build_bundles(fused: Sequence[FusedHit], store: MemoryStore) -> ProjectionResult:
    members: dict[AtomId, list[FusedHit]] = {}
    discarded = []
    for hit in fused:
        claims = project_hit(hit, store)
        if not claims:
            discarded.append(hit)
            continue
        for claim_id in claims:
            members.setdefault(claim_id, []).append(hit)

    bundles = []
    for claim_id, hits in members.items():
        rho = 0.0
        for h in hits:
            rho += h.s_ret
        closure = frozenset(h.atom_id for h in hits) | store.association_set(claim_id)
        bundles.append(CandidateBundle(claim_id, rho, closure, tuple(hits)))
    return ProjectionResult(order_bundles(bundles), discarded)


def unprojected_bundles(fused: Sequence[FusedHit], store: MemoryStore) -> ProjectionResult:
    """Each fused hit becomes its own bundle, closure only the hit atom."""
    bundles = [
        CandidateBundle(h.atom_id, h.s_ret, frozenset({h.atom_id}), (h,), isinstance(store.get(h.atom_id), ClaimAtom))
        for h in fused
    ]
    return ProjectionResult(order_bundles(bundles))


def span_bundles(fused: Sequence[FusedHit], store: MemoryStore) -> ProjectionResult:
    """Bundles headed by spans, for stores without claims.

    A span hit heads its own bundle; a cue hit joins the bundles of the
    spans that ground it. Page hits have no span and are discarded.
    """
    members: dict[AtomId, list[FusedHit]] = {}
    discarded = []
    for hit in fused:
        heads = sup(store.get(hit.atom_id))
        if not heads:
            discarded.append(hit)
        for span_id in heads:
            members.setdefault(span_id, []).append(hit)
    bundles = []
    for span_id, hits in members.items():
        rho = 0.0
        for h in hits:
            rho += h.s_ret
        closure = frozenset(h.atom_id for h in hits) | {span_id}
        bundles.append(CandidateBundle(span_id, rho, closure, tuple(hits), is_claim=False))
    return ProjectionResult(order_bundles(bundles), discarded)
