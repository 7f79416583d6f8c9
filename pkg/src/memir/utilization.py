"""Reranking, selection, and the fact interface handed to answer composers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from memir.atoms import AtomId, ClaimAtom, HandleAtom, PivotAtom, SpanAtom, TimeAtom
from memir.errors import ProviderFailure
from memir.projection import CandidateBundle, order_bundles
from memir.providers.base import (
    Answer,
    AnswerComposer,
    AnswerOutcome,
    BundleScorer,
    BundleSelector,
    InsufficientEvidence,
    invoke,
)
from memir.store import MemoryStore

ROLES = ("direct", "support")


@dataclass(frozen=True)
class UtilizationConfig:
    pool_m: int = 32
    rerank_keep_k: int = 32
    select_budget_x: int = 6
    max_excerpts: int = 3
    max_chars: int = 1200
    serialize_closure: bool = True

    def __post_init__(self):
        if self.pool_m < 1 or self.rerank_keep_k < 1:
            raise ValueError("pool_m and rerank_keep_k must be >= 1")
        if self.rerank_keep_k > self.pool_m:
            raise ValueError("rerank_keep_k must not exceed pool_m")
        if self.select_budget_x < 1:
            raise ValueError("select_budget_x must be >= 1")
        if self.max_excerpts < 0 or self.max_chars < 1:
            raise ValueError("serialization caps must be non-negative")


# -- serialization -------------------------------------------------------------


def locator(store: MemoryStore, span: SpanAtom) -> str:
    """``P{page}:T{turn}`` with the global turn index of the span."""
    page = store.get(span.page_id)
    slot = page.turn_at(span.char_range[0])
    turn = slot.turn_index if slot is not None else page.turn_range[0]
    return f"P{page.id.page_ordinal}:T{turn}"


def head_text(store: MemoryStore, atom_id: AtomId) -> str:
    atom = store.get(atom_id)
    if isinstance(atom, ClaimAtom):
        return atom.claim_text
    if isinstance(atom, SpanAtom):
        return atom.verbatim_text
    if isinstance(atom, (HandleAtom, TimeAtom)):
        return atom.surface_text
    if isinstance(atom, PivotAtom):
        return atom.support_text
    return atom.raw_text


def temporal_cues(store: MemoryStore, ids) -> list[TimeAtom]:
    """Time atoms among ``ids``: by normalized start, undated last, then id."""
    times = [store.get(i) for i in ids if i.kind_tag == "T"]
    return sorted(times, key=lambda t: (t.normalized is None, t.normalized[0] if t.normalized else "", t.id))


def evidence_spans(store: MemoryStore, bundle: CandidateBundle) -> list[SpanAtom]:
    """Spans of the closure, the head's own support first."""
    head = store.get(bundle.claim_id)
    own = list(head.support_span_ids) if isinstance(head, ClaimAtom) else []
    rest = sorted(i for i in bundle.closure if i.kind_tag == "S" and i not in own)
    return [store.get(i) for i in own + rest]


def serialize_bundle(bundle: CandidateBundle, store: MemoryStore, config: UtilizationConfig = UtilizationConfig()) -> str:
    lines = [head_text(store, bundle.claim_id)]
    if not config.serialize_closure:
        return lines[0][: config.max_chars]
    cues = temporal_cues(store, bundle.closure)
    if cues:
        lines.append("TIME: " + "; ".join(t.render() for t in cues))
    for span in evidence_spans(store, bundle)[: config.max_excerpts]:
        lines.append(f'EVIDENCE: {locator(store, span)} "{span.verbatim_text}"')
    return "\n".join(lines)[: config.max_chars]


# -- reranking -------------------------------------------------------------------


@dataclass
class RerankResult:
    ranked: list[tuple[CandidateBundle, float]]
    scored: list[AtomId] = field(default_factory=list)
    fallback: Optional[str] = None


def rerank_pool(
    bundles: Sequence[CandidateBundle],
    query: str,
    scorer: BundleScorer,
    store: MemoryStore,
    config: UtilizationConfig = UtilizationConfig(),
    timeout: Optional[float] = None,
) -> RerankResult:
    """Score the rho-top-M bundles and keep the best K.

    A failing scorer (exception, timeout, non-finite score) drops the
    whole pool back to rho order, with ``fallback`` set to the reason.
    """
    pool = order_bundles(bundles)[: config.pool_m]
    scores = []
    fallback = None
    try:
        for b in pool:
            s = invoke("scorer", scorer.score, query, serialize_bundle(b, store, config), timeout=timeout)
            if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
                raise ProviderFailure("scorer", f"invalid score {s!r}")
            scores.append(float(s))
    except ProviderFailure as exc:
        fallback = exc.reason
        scores = [b.rho for b in pool]
    ranked = sorted(zip(pool, scores), key=lambda p: (-p[1], -p[0].rho, p[0].claim_id))
    return RerankResult(ranked[: config.rerank_keep_k], [b.claim_id for b in pool], fallback)


# -- selection -------------------------------------------------------------------


@dataclass(frozen=True)
class SelectedBundle:
    bundle: CandidateBundle
    role: str
    rank_score: float


@dataclass
class SelectionResult:
    selected: list[SelectedBundle]
    rejected: list[tuple[Any, str]] = field(default_factory=list)
    fallback: Optional[str] = None


def _pair(entry: Any) -> tuple[Any, Any]:
    if isinstance(entry, dict):
        return entry.get("bundle_id"), entry.get("role")
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return entry[0], entry[1]
    raise ValueError("not an (id, role) pair")


def select_bundles(
    reranked: Sequence[tuple[CandidateBundle, float]],
    query: str,
    selector: BundleSelector,
    store: MemoryStore,
    config: UtilizationConfig = UtilizationConfig(),
    timeout: Optional[float] = None,
) -> SelectionResult:
    if not reranked:
        return SelectionResult([])
    offered = {str(b.claim_id): (b, s) for b, s in reranked}
    payload = [(str(b.claim_id), serialize_bundle(b, store, config)) for b, _ in reranked]
    try:
        raw = invoke("selector", selector.select, query, payload, config.select_budget_x, timeout=timeout)
        if not isinstance(raw, (list, tuple)):
            raise ProviderFailure("selector", f"output is {type(raw).__name__}, not a list")
    except ProviderFailure as exc:
        chosen = [SelectedBundle(b, "direct", s) for b, s in reranked[: config.select_budget_x]]
        return SelectionResult(chosen, fallback=exc.reason)

    selected: list[SelectedBundle] = []
    rejected = []
    seen = set()
    for entry in raw:
        try:
            bid, role = _pair(entry)
        except ValueError as exc:
            rejected.append((entry, str(exc)))
            continue
        if not isinstance(bid, str) or bid not in offered:
            rejected.append((entry, "unknown bundle id"))
        elif role not in ROLES:
            rejected.append((entry, f"invalid role {role!r}"))
        elif bid in seen:
            rejected.append((entry, "duplicate"))
        elif len(selected) >= config.select_budget_x:
            rejected.append((entry, "over budget"))
        else:
            seen.add(bid)
            bundle, score = offered[bid]
            selected.append(SelectedBundle(bundle, role, score))
    return SelectionResult(selected, rejected)


# -- fact interface ---------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    atom_id: AtomId
    kind: str
    excerpt: str
    locator: str


@dataclass(frozen=True)
class FactRecord:
    claim_id: AtomId
    claim_text: str
    provenance: tuple[Provenance, ...]
    temporal_cues: tuple[str, ...]
    role: str
    rank_score: float = 0.0
    is_claim: bool = True

    def spans(self) -> list[Provenance]:
        return [p for p in self.provenance if p.kind == "span"]


@dataclass(frozen=True)
class FactInterface:
    query: str
    records: tuple[FactRecord, ...]
    sufficiency_flag: bool

    def render(self) -> str:
        return render_fact_interface(self)


def resolve_provenance(store: MemoryStore, atom_id: AtomId) -> Provenance:
    atom = store.get(atom_id)
    if isinstance(atom, SpanAtom):
        return Provenance(atom_id, atom.kind, atom.verbatim_text, locator(store, atom))
    support = getattr(atom, "support_span_ids", ())
    loc = locator(store, store.get(support[0])) if support else f"P{atom_id.page_ordinal}"
    return Provenance(atom_id, atom.kind, head_text(store, atom_id), loc)


def build_fact_interface(
    selected: Sequence[SelectedBundle], query: str, store: MemoryStore, flatten: bool = False
) -> FactInterface:
    """One record per selection, direct records first then by rank score.

    ``flatten`` drops closures (the no_bundles ablation): records keep only
    the head text and role, without provenance or temporal cues.
    """
    records = []
    for sel in selected:
        b = sel.bundle
        if flatten:
            prov, cues = (), ()
        else:
            prov = tuple(resolve_provenance(store, i) for i in sorted(b.closure))
            cues = tuple(t.render() for t in temporal_cues(store, b.closure))
        records.append(FactRecord(b.claim_id, head_text(store, b.claim_id), prov, cues, sel.role, sel.rank_score, b.is_claim))
    records.sort(key=lambda r: (r.role != "direct", -r.rank_score))
    return FactInterface(query, tuple(records), any(r.role == "direct" for r in records))


def render_fact_interface(fi: FactInterface) -> str:
    lines = [f"QUERY: {fi.query}"]
    for i, r in enumerate(fi.records, start=1):
        lines.append(f"FACT[{i}] ({r.role}) {r.claim_text}")
        lines.append("TIME: " + ("; ".join(r.temporal_cues) if r.temporal_cues else "none"))
        for p in r.spans():
            lines.append(f'EVIDENCE: {p.locator} "{p.excerpt}"')
    return "\n".join(lines) + "\n"


def compose_answer(
    query: str, fi: FactInterface, composer: AnswerComposer, timeout: Optional[float] = None
) -> AnswerOutcome:
    if not fi.records or not fi.sufficiency_flag:
        return InsufficientEvidence("no direct fact record")
    outcome = invoke("composer", composer.compose, query, fi.render(), timeout=timeout)
    if not isinstance(outcome, (Answer, InsufficientEvidence)):
        raise ProviderFailure("composer", f"returned {type(outcome).__name__}")
    return outcome
