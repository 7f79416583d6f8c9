"""Query pipeline: retrieve, fuse, project, rerank, select, compose.

An :class:`Engine` owns one immutable store plus its indexes and answers
queries against them. It is safe to share between threads.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from memir.atoms import AtomId, ClaimAtom, HandleAtom, PivotAtom, TimeAtom
from memir.compiler import build_views
from memir.config import PipelineProfile, get_profile
from memir.projection import ProjectionResult, build_bundles, span_bundles, unprojected_bundles
from memir.providers.base import Answer, AnswerOutcome, InsufficientEvidence, Providers
from memir.retrieval import ROUTES, build_indexes, fuse_rrf, merge_view_hits, rewrite_query, route_topk
from memir.store import MemoryStore
from memir.utilization import (
    ROLES,
    FactInterface,
    RerankResult,
    SelectionResult,
    build_fact_interface,
    compose_answer,
    rerank_pool,
    select_bundles,
)


def ablate_store(store: MemoryStore, flags) -> MemoryStore:
    """Copy of ``store`` without cue atoms (no_cues) and/or claims (no_claims).

    Views are rebuilt so nothing removed stays reachable through an index.
    """
    flags = frozenset(flags)
    if not flags & {"no_cues", "no_claims"}:
        return store
    meta = dict(store.conversation_meta)
    meta["ablations"] = sorted(flags & {"no_cues", "no_claims"})
    out = MemoryStore(meta)
    for atom in store.atoms.values():
        if isinstance(atom, (HandleAtom, TimeAtom, PivotAtom)) and "no_cues" in flags:
            continue
        if isinstance(atom, ClaimAtom):
            if "no_claims" in flags:
                continue
            if "no_cues" in flags:
                atom = dataclasses.replace(atom, linked_cue_ids=())
        out.add_atom(atom)
    for view in build_views(out):
        out.add_view(view)
    return out


def _hit_record(hit) -> dict:
    return {"atom_id": str(hit.atom_id), "s_ret": hit.s_ret, "routes": dict(hit.contributing_routes)}


@dataclass
class QueryResult:
    query: str
    fact_interface: FactInterface
    outcome: Optional[AnswerOutcome]
    projection: ProjectionResult
    rerank: RerankResult
    selection: SelectionResult
    trace: list[dict] = field(default_factory=list)

    @property
    def offered_heads(self) -> list:
        return [b.claim_id for b, _ in self.rerank.ranked]

    @property
    def selected_heads(self) -> list:
        return [s.bundle.claim_id for s in self.selection.selected]


def outcome_record(outcome: Optional[AnswerOutcome]) -> dict:
    if isinstance(outcome, Answer):
        return {"record": "outcome", "kind": "answer", "text": outcome.text, "cited_records": list(outcome.cited_records)}
    if isinstance(outcome, InsufficientEvidence):
        return {"record": "outcome", "kind": "insufficient_evidence", "reason": outcome.reason}
    return {"record": "outcome", "kind": "not_composed"}


class Engine:
    def __init__(self, store: MemoryStore, providers: Providers, profile: Optional[PipelineProfile] = None):
        self.profile = profile or get_profile("locomo_default")
        self.providers = providers
        self.source_store = store
        self.store = ablate_store(store, self.profile.ablation_flags)
        self.indexes = build_indexes(self.store, providers.embedder, self.profile.retrieval)

    def with_profile(self, profile: PipelineProfile) -> "Engine":
        return Engine(self.source_store, self.providers, profile)

    def query(self, question: str, compose: bool = True) -> QueryResult:
        profile = self.profile
        flags = profile.ablation_flags
        rcfg, ucfg = profile.retrieval, profile.utilization
        if "no_bundles" in flags:
            ucfg = dataclasses.replace(ucfg, serialize_closure=False)
        timeout = self.providers.timeout
        trace: list[dict] = [
            {
                "record": "query",
                "query": question,
                "profile": profile.name,
                "ablations": sorted(flags),
                "rrf_k": rcfg.rrf_k,
                "per_route_k": rcfg.per_route_k,
                "pool_m": ucfg.pool_m,
                "rerank_keep_k": ucfg.rerank_keep_k,
                "select_budget_x": ucfg.select_budget_x,
            }
        ]

        variants = rewrite_query(question)
        query_vec = self.indexes.embedder.embed(question)
        per_route = {}
        for route in ROUTES:
            hits = route_topk(question, route, self.indexes, rcfg, variants=variants, query_vec=query_vec)
            merged = merge_view_hits(hits)
            per_route[route] = merged
            trace.append(
                {
                    "record": "route",
                    "route": route.value,
                    "view_hits": [
                        {"view_id": h.view_id, "atom_id": str(h.atom_id), "rank": h.rank, "raw_score": h.raw_score}
                        for h in hits
                    ],
                    "atom_hits": [{"atom_id": str(h.atom_id), "rank": h.rank} for h in merged],
                }
            )
        fused = fuse_rrf(per_route, rcfg.rrf_k)
        trace.append({"record": "fused", "hits": [_hit_record(h) for h in fused]})

        if "no_projection" in flags:
            projection = unprojected_bundles(fused, self.store)
        elif "no_claims" in flags:
            projection = span_bundles(fused, self.store)
        else:
            projection = build_bundles(fused, self.store)
        for b in projection.bundles:
            trace.append(
                {
                    "record": "bundle",
                    "claim_id": str(b.claim_id),
                    "is_claim": b.is_claim,
                    "rho": b.rho,
                    "member_hits": [_hit_record(h) for h in b.member_hits],
                    "closure": [str(i) for i in sorted(b.closure)],
                }
            )
        trace.append({"record": "discarded", "hits": [_hit_record(h) for h in projection.discarded]})

        rerank = rerank_pool(projection.bundles, question, self.providers.scorer, self.store, ucfg, timeout)
        trace.append(
            {
                "record": "rerank",
                "scored": [str(i) for i in rerank.scored],
                "ranked": [{"claim_id": str(b.claim_id), "s_rank": s, "rho": b.rho} for b, s in rerank.ranked],
                "fallback": rerank.fallback,
            }
        )
        selection = select_bundles(rerank.ranked, question, self.providers.selector, self.store, ucfg, timeout)
        trace.append(
            {
                "record": "selection",
                "offered": [str(b.claim_id) for b, _ in rerank.ranked],
                "selected": [
                    {"claim_id": str(s.bundle.claim_id), "role": s.role, "rank_score": s.rank_score}
                    for s in selection.selected
                ],
                "rejected": [{"entry": repr(e), "reason": r} for e, r in selection.rejected],
                "fallback": selection.fallback,
            }
        )
        fi = build_fact_interface(selection.selected, question, self.store, flatten="no_bundles" in flags)
        trace.append(
            {"record": "fact_interface", "sufficiency": fi.sufficiency_flag, "rendered": fi.render()}
        )
        outcome = compose_answer(question, fi, self.providers.composer, timeout) if compose else None
        trace.append(outcome_record(outcome))
        return QueryResult(question, fi, outcome, projection, rerank, selection, trace)


def validate_trace(records: list[dict]) -> list[str]:
    """Recompute the pipeline invariants from a query trace.

    Returns human-readable violations; an empty list means the trace is
    consistent with fusion, bundle, pool, and selection discipline.
    """
    problems = []
    by_kind: dict[str, list[dict]] = {}
    for rec in records:
        by_kind.setdefault(rec.get("record"), []).append(rec)
    for kind in ("query", "fused", "rerank", "selection", "fact_interface"):
        if len(by_kind.get(kind, [])) != 1:
            problems.append(f"expected one {kind} record, found {len(by_kind.get(kind, []))}")
    if problems:
        return problems
    q = by_kind["query"][0]
    rrf_k, per_route_k = q["rrf_k"], q["per_route_k"]
    m, k, x = q["pool_m"], q["rerank_keep_k"], q["select_budget_x"]

    route_ranks: dict[str, dict[str, int]] = {}
    for rec in by_kind.get("route", []):
        hits = rec["atom_hits"]
        if len(rec["view_hits"]) > per_route_k:
            problems.append(f"route {rec['route']} returned more than {per_route_k} hits")
        if [h["rank"] for h in hits] != list(range(1, len(hits) + 1)):
            problems.append(f"route {rec['route']} ranks are not consecutive from 1")
        for h in hits:
            route_ranks.setdefault(h["atom_id"], {})[rec["route"]] = h["rank"]

    fused = by_kind["fused"][0]["hits"]
    if {h["atom_id"] for h in fused} != set(route_ranks):
        problems.append("fused atoms differ from the union of route hits")
    s_ret = {}
    for h in fused:
        s_ret[h["atom_id"]] = h["s_ret"]
        expected = sum(1.0 / (rrf_k + r) for r in route_ranks.get(h["atom_id"], {}).values())
        if not math.isclose(h["s_ret"], expected, rel_tol=0, abs_tol=1e-12):
            problems.append(f"s_ret of {h['atom_id']} is {h['s_ret']}, expected {expected}")

    bundles = by_kind.get("bundle", [])
    rho = {}
    for b in bundles:
        rho[b["claim_id"]] = b["rho"]
        total = sum(s_ret.get(h["atom_id"], math.nan) for h in b["member_hits"])
        if not math.isclose(b["rho"], total, rel_tol=0, abs_tol=1e-12):
            problems.append(f"rho of {b['claim_id']} is {b['rho']}, members sum to {total}")
        closure = set(b["closure"])
        if not {h["atom_id"] for h in b["member_hits"]} <= closure:
            problems.append(f"bundle {b['claim_id']} closure misses a member hit")
        if b["is_claim"] != b["claim_id"].startswith("C"):
            problems.append(f"bundle {b['claim_id']} head kind disagrees with is_claim")
        if not q["ablations"] and not b["is_claim"]:
            problems.append(f"bundle {b['claim_id']} is not headed by a claim")

    order = sorted(rho, key=lambda c: (-rho[c], AtomId.parse(c)))
    top_m = set(order[:m])
    rr = by_kind["rerank"][0]
    if not set(rr["scored"]) <= top_m:
        problems.append("a bundle outside the rho-top-M was scored")
    ranked = [r["claim_id"] for r in rr["ranked"]]
    if len(ranked) > k:
        problems.append(f"rerank kept {len(ranked)} bundles, more than K={k}")
    if not set(ranked) <= set(rr["scored"]):
        problems.append("reranked list holds an unscored bundle")
    scores = [r["s_rank"] for r in rr["ranked"]]
    if any(a < b for a, b in zip(scores, scores[1:])):
        problems.append("reranked list is not sorted by s_rank")

    sel = by_kind["selection"][0]
    if sel["offered"] != ranked:
        problems.append("bundles offered to the selector differ from the reranked top-K")
    chosen = [s["claim_id"] for s in sel["selected"]]
    if len(chosen) > x:
        problems.append(f"selected {len(chosen)} bundles, more than X={x}")
    if len(set(chosen)) != len(chosen):
        problems.append("selection holds duplicates")
    if not set(chosen) <= set(sel["offered"]):
        problems.append("selection holds a bundle that was not offered")
    if any(s["role"] not in ROLES for s in sel["selected"]):
        problems.append("selection holds an invalid role")

    fi = by_kind["fact_interface"][0]
    has_direct = any(s["role"] == "direct" for s in sel["selected"])
    if fi["sufficiency"] != has_direct:
        problems.append("sufficiency flag disagrees with the selected roles")
    return problems

