"""Compilation of dialogue history into a validated memory store.

Pipeline per page: paginate -> segment spans -> extract cues -> write
claims, followed by view construction over the whole store. Provider
output is never trusted: each proposal is checked against the support
constraint and rejected (with a report record) when it fails.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Optional, Sequence

from memir.atoms import (
    AtomId,
    ClaimAtom,
    HandleAtom,
    PageAtom,
    PivotAtom,
    RetrievalView,
    SpanAtom,
    TimeAtom,
    TurnSlot,
    render_interval,
)
from memir.errors import EmptyHistory, MemIRError, ProviderFailure
from memir.providers.base import PageCues, Providers, invoke
from memir.store import MAX_CLAIM_SUPPORT, MemoryStore
from memir.temporal import parse_timestamp
from memir.text import sentence_bounds

log = logging.getLogger(__name__)

IMAGE_MARKER = "[image]"


@dataclass(frozen=True)
class Turn:
    session_key: str
    speaker: str
    text: str
    timestamp: Optional[str] = None
    image_caption: Optional[str] = None

    @property
    def display_text(self) -> str:
        if self.image_caption:
            return f"{self.text} {IMAGE_MARKER} {self.image_caption}" if self.text else f"{IMAGE_MARKER} {self.image_caption}"
        return self.text


@dataclass
class InteractionHistory:
    turns: list[Turn]
    conversation_id: str = "conversation"

    def __post_init__(self):
        seen: list[str] = []
        for turn in self.turns:
            if seen and turn.session_key == seen[-1]:
                continue
            if turn.session_key in seen:
                raise ValueError(f"session {turn.session_key!r} reappears after a later session")
            seen.append(turn.session_key)

    def __len__(self) -> int:
        return len(self.turns)


PAGE_POLICIES = ("auto", "by_session", "fixed_window")


@dataclass(frozen=True)
class CompileConfig:
    max_claims_per_page: int = 12
    page_policy: str = "auto"
    window_size: int = 10
    sentence_splitter: str = "rule"

    def __post_init__(self):
        if self.max_claims_per_page < 1:
            raise ValueError("max_claims_per_page must be >= 1")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.page_policy not in PAGE_POLICIES:
            raise ValueError(f"unknown page_policy {self.page_policy!r}")
        if self.sentence_splitter != "rule":
            raise ValueError(f"unknown sentence_splitter {self.sentence_splitter!r}")


@dataclass(frozen=True)
class Rejection:
    page_id: str
    provider: str
    reason: str
    payload_excerpt: str

    def to_record(self) -> dict:
        return {
            "page_id": self.page_id,
            "provider": self.provider,
            "reason": self.reason,
            "payload_excerpt": self.payload_excerpt,
        }


@dataclass
class CompilationReport:
    rejections: list[Rejection] = field(default_factory=list)
    failed_pages: dict[str, list[str]] = field(default_factory=dict)
    truncated: dict[str, int] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.failed_pages)

    def reject(self, page: PageAtom, provider: str, reason: str, payload: Any) -> None:
        self.rejections.append(Rejection(str(page.id), provider, reason, _excerpt(payload)))

    def fail(self, page: PageAtom, exc: ProviderFailure) -> None:
        self.failed_pages.setdefault(str(page.id), []).append(exc.provider)
        self.reject(page, exc.provider, f"ProviderFailure: {exc.reason}", "")


@dataclass
class CompileResult:
    store: MemoryStore
    report: CompilationReport


def _excerpt(payload: Any, limit: int = 160) -> str:
    text = payload if isinstance(payload, str) else repr(payload)
    return text if len(text) <= limit else text[: limit - 3] + "..."


# -- pagination and segmentation ---------------------------------------------


def paginate(history: InteractionHistory, config: CompileConfig = CompileConfig()) -> list[PageAtom]:
    if not history.turns:
        raise EmptyHistory(f"history {history.conversation_id!r} has no turns")
    policy = config.page_policy
    if policy == "auto":
        policy = "by_session" if any(t.session_key for t in history.turns) else "fixed_window"

    groups: list[list[int]] = []
    for i, turn in enumerate(history.turns):
        if policy == "by_session":
            if groups and history.turns[groups[-1][0]].session_key == turn.session_key:
                groups[-1].append(i)
            else:
                groups.append([i])
        elif not groups or len(groups[-1]) >= config.window_size:
            groups.append([i])
        else:
            groups[-1].append(i)

    pages = []
    for ordinal, members in enumerate(groups):
        lines: list[str] = []
        layout: list[TurnSlot] = []
        offset = 0
        timestamp = None
        for i in members:
            turn = history.turns[i]
            prefix = f"{turn.speaker}: "
            text = turn.display_text
            start = offset + len(prefix)
            layout.append(TurnSlot(i, turn.speaker, start, start + len(text)))
            lines.append(prefix + text)
            offset = start + len(text) + 1
            if timestamp is None and turn.timestamp:
                timestamp = parse_timestamp(turn.timestamp)
        pages.append(
            PageAtom(
                id=AtomId("P", ordinal, 0),
                session_key=history.turns[members[0]].session_key,
                turn_range=(members[0], members[-1]),
                raw_text="\n".join(lines),
                timestamp_hint=timestamp,
                turn_layout=tuple(layout),
            )
        )
    return pages


def segment_spans(page: PageAtom) -> list[SpanAtom]:
    """Sentence-level spans of each turn, in page order."""
    spans = []
    for slot in page.turn_layout:
        for s, e in sentence_bounds(page.raw_text[slot.start:slot.end]):
            start, end = slot.start + s, slot.start + e
            spans.append(
                SpanAtom(
                    id=AtomId("S", page.id.page_ordinal, len(spans)),
                    page_id=page.id,
                    speaker=slot.speaker,
                    char_range=(start, end),
                    verbatim_text=page.raw_text[start:end],
                )
            )
    return spans


# -- proposal validation -------------------------------------------------------


class _Reject(Exception):
    pass


def _field(proposal: Any, name: str, default: Any = None) -> Any:
    if isinstance(proposal, dict):
        return proposal.get(name, default)
    return getattr(proposal, name, default)


def _text(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise _Reject(f"Malformed: {what} must be non-empty text")
    return value


def _parse_ids(value: Any, what: str) -> list[AtomId]:
    if value is None:
        return []
    if isinstance(value, (str, bytes)) or not isinstance(value, (list, tuple)):
        raise _Reject(f"Malformed: {what} must be a list of ids")
    out: list[AtomId] = []
    for raw in value:
        try:
            atom_id = AtomId.parse(raw)
        except ValueError:
            raise _Reject(f"Malformed: {what} entry {raw!r} is not an atom id") from None
        if atom_id not in out:
            out.append(atom_id)
    return out


def _page_support(value: Any, page_spans: dict[AtomId, SpanAtom]) -> list[SpanAtom]:
    ids = _parse_ids(value, "support_span_ids")
    if not ids:
        raise _Reject("SupportViolation: empty support")
    spans = []
    for sid in ids:
        if sid.kind_tag != "S":
            raise _Reject(f"SupportViolation: {sid} is not a span")
        if sid not in page_spans:
            raise _Reject(f"DanglingReference: {sid} is not a span of this page")
        spans.append(page_spans[sid])
    return spans


def _interval(value: Any) -> Optional[tuple[str, str]]:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise _Reject("Malformed: normalized must be a (start, end) pair")
    try:
        start, end = (date.fromisoformat(v) for v in value)
    except (TypeError, ValueError):
        raise _Reject("Malformed: normalized bounds must be ISO dates") from None
    if end < start:
        raise _Reject("Malformed: normalized interval ends before it starts")
    return (start.isoformat(), end.isoformat())


def _substring_of(text: str, spans: Sequence[SpanAtom], what: str) -> None:
    if not any(text in s.verbatim_text for s in spans):
        raise _Reject(f"InvalidAtom: {what} {text!r} is not an exact substring of a cited span")


def _merge(entries: list, key, spans_of) -> list:
    """Collapse proposals with equal keys, unioning their support in order."""
    merged: dict = {}
    for entry in entries:
        k = key(entry)
        if k in merged:
            for s in spans_of(entry):
                if s not in merged[k][1]:
                    merged[k][1].append(s)
        else:
            merged[k] = (entry, list(spans_of(entry)))
    return list(merged.values())


def extract_cues(
    store: MemoryStore,
    page: PageAtom,
    spans: Sequence[SpanAtom],
    proposals: Any,
    report: Optional[CompilationReport] = None,
) -> PageCues:
    """Validate cue proposals for ``page`` and store the survivors.

    ``proposals`` is the raw extractor output; anything that fails the
    support constraint or the substring rules is rejected, never stored.
    """
    report = report if report is not None else CompilationReport()
    page_spans = {s.id: s for s in spans}
    p = page.id.page_ordinal

    handles, times, pivots = [], [], []
    for kind, items in (
        ("handle", _field(proposals, "handles", [])),
        ("time", _field(proposals, "times", [])),
        ("pivot", _field(proposals, "pivots", [])),
    ):
        if not isinstance(items, (list, tuple)):
            report.reject(page, "cue_extractor", f"Malformed: {kind}s is not a list", items)
            continue
        for item in items:
            try:
                support = _page_support(_field(item, "support_span_ids"), page_spans)
                if kind == "handle":
                    surface = _text(_field(item, "surface_text"), "surface_text")
                    _substring_of(surface, support, "handle surface")
                    handles.append((surface, support))
                elif kind == "time":
                    surface = _text(_field(item, "surface_text"), "surface_text")
                    _substring_of(surface, support, "time surface")
                    norm = _interval(_field(item, "normalized"))
                    rel = _field(item, "relative_expression")
                    if rel is not None and not isinstance(rel, str):
                        raise _Reject("Malformed: relative_expression must be text")
                    if norm is None and not rel:
                        raise _Reject("InvalidAtom: time has neither normalized nor relative form")
                    times.append(((surface, norm, rel or None), support))
                else:
                    label = _text(_field(item, "referent_label"), "referent_label")
                    support_text = _text(_field(item, "support_text"), "support_text")
                    _substring_of(support_text, support, "pivot support_text")
                    pivots.append((label, support_text, support))
            except _Reject as exc:
                report.reject(page, "cue_extractor", str(exc), item)

    stored_h, stored_t, stored_v = [], [], []
    for (surface, _), support in _merge(handles, key=lambda e: e[0], spans_of=lambda e: e[1]):
        atom = HandleAtom(AtomId("H", p, len(stored_h)), surface, tuple(s.id for s in support))
        _store(store, atom, page, "cue_extractor", report, stored_h)
    for ((surface, norm, rel), _), support in _merge(times, key=lambda e: e[0], spans_of=lambda e: e[1]):
        atom = TimeAtom(AtomId("T", p, len(stored_t)), surface, norm, rel, tuple(s.id for s in support))
        _store(store, atom, page, "cue_extractor", report, stored_t)
    for label, support_text, support in pivots:
        atom = PivotAtom(AtomId("V", p, len(stored_v)), label, tuple(s.id for s in support), support_text)
        _store(store, atom, page, "cue_extractor", report, stored_v)
    return PageCues(tuple(stored_h), tuple(stored_t), tuple(stored_v))


def _store(store: MemoryStore, atom, page: PageAtom, provider: str, report: CompilationReport, sink: list) -> bool:
    try:
        store.add_atom(atom)
    except MemIRError as exc:
        report.reject(page, provider, f"{type(exc).__name__}: {exc}", atom)
        return False
    sink.append(atom)
    return True


def write_claims(
    store: MemoryStore,
    page: PageAtom,
    cues: PageCues,
    proposals: Any,
    budget: int,
    report: Optional[CompilationReport] = None,
) -> list[ClaimAtom]:
    """Validate claim proposals for ``page`` and store at most ``budget``.

    Proposals are taken in provider order; once the budget is filled the
    remaining valid ones are truncated and logged.
    """
    report = report if report is not None else CompilationReport()
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not isinstance(proposals, (list, tuple)):
        report.reject(page, "claim_writer", "Malformed: claim output is not a list", proposals)
        return []
    page_cue_ids = {c.id for c in cues.all()}
    p = page.id.page_ordinal

    stored: list[ClaimAtom] = []
    truncated = 0
    for item in proposals:
        try:
            text = _text(_field(item, "claim_text"), "claim_text")
            support_ids = _parse_ids(_field(item, "support_span_ids"), "support_span_ids")
            if not support_ids:
                raise _Reject("SupportViolation: empty support")
            if len(support_ids) > MAX_CLAIM_SUPPORT:
                raise _Reject(f"SupportViolation: {len(support_ids)} support spans (max {MAX_CLAIM_SUPPORT})")
            for sid in support_ids:
                if sid.kind_tag != "S":
                    raise _Reject(f"SupportViolation: {sid} is not a span")
                if sid not in store:
                    raise _Reject(f"DanglingReference: support span {sid} does not exist")
            if not any(sid.page_ordinal == p for sid in support_ids):
                raise _Reject("SupportViolation: no support span on this page")
            linked = []
            for cid in _parse_ids(_field(item, "linked_cue_ids", ()), "linked_cue_ids"):
                cue = store.atoms.get(cid)
                ok = (
                    cid.kind_tag in "HTV"
                    and cue is not None
                    and (cid in page_cue_ids or set(cue.support_span_ids) & set(support_ids))
                )
                if ok:
                    linked.append(cid)
                else:
                    report.reject(page, "claim_writer", f"DanglingReference: linked cue {cid} dropped", item)
        except _Reject as exc:
            report.reject(page, "claim_writer", str(exc), item)
            continue
        if len(stored) >= budget:
            truncated += 1
            continue
        atom = ClaimAtom(AtomId("C", p, len(stored)), text, tuple(support_ids), tuple(linked))
        _store(store, atom, page, "claim_writer", report, stored)

    if truncated:
        report.truncated[str(page.id)] = truncated
        report.reject(page, "claim_writer", f"BudgetTruncated: {truncated} claims beyond budget {budget}", "")
        log.info("page %s: truncated %d claims beyond budget %d", page.id, truncated, budget)
    return stored


# -- views ---------------------------------------------------------------------


def time_key(atom: TimeAtom) -> str:
    if atom.normalized is None:
        return atom.surface_text
    return f"{atom.surface_text} {render_interval(atom.normalized)}"


def build_views(store: MemoryStore) -> list[RetrievalView]:
    """Deterministic retrieval views, in store order."""
    views = []

    def targets(atom_id: AtomId) -> tuple[AtomId, ...]:
        return tuple(sorted(store.claims_containing(atom_id)))

    for atom in store.atoms.values():
        aid = atom.id
        if isinstance(atom, ClaimAtom):
            views.append(RetrievalView(f"claim_text:{aid}", aid, "claim_text", atom.claim_text, (aid,)))
        elif isinstance(atom, SpanAtom):
            t = targets(aid)
            views.append(RetrievalView(f"span_text:{aid}", aid, "span_text", atom.verbatim_text, t))
            siblings = store.spans_of(atom.page_id)
            i = siblings.index(aid)
            window = siblings[max(0, i - 1): i + 2]
            context = " ".join(store.atoms[s].verbatim_text for s in window)
            views.append(RetrievalView(f"span_context:{aid}", aid, "span_context", context, t))
        elif isinstance(atom, HandleAtom):
            views.append(RetrievalView(f"handle_alias:{aid}", aid, "handle_alias", atom.surface_text, targets(aid)))
        elif isinstance(atom, TimeAtom):
            views.append(RetrievalView(f"time_key:{aid}", aid, "time_key", time_key(atom), targets(aid)))
        elif isinstance(atom, PivotAtom):
            views.append(RetrievalView(f"pivot_key:{aid}", aid, "pivot_key", atom.referent_label, targets(aid)))
    return views


# -- driver --------------------------------------------------------------------


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def compile_history(
    history: InteractionHistory,
    providers: Providers,
    config: CompileConfig = CompileConfig(),
    workers: int = 1,
) -> CompileResult:
    """Compile ``history`` into a memory store.

    Provider calls for different pages may run concurrently (``workers``);
    validation and storage happen in page order, so the result does not
    depend on scheduling.
    """
    pages = paginate(history, config)
    store = MemoryStore({"conversation_id": history.conversation_id, "turn_count": len(history.turns)})
    report = CompilationReport()

    page_spans = []
    for page in pages:
        store.add_atom(page)
        spans = segment_spans(page)
        store.extend(spans)
        page_spans.append(spans)

    def call_extractor(i):
        try:
            return invoke("cue_extractor", providers.cue_extractor.extract, pages[i], page_spans[i], timeout=providers.timeout)
        except ProviderFailure as exc:
            return exc

    cue_results = _map(call_extractor, list(range(len(pages))), workers)
    page_cues = []
    for page, spans, result in zip(pages, page_spans, cue_results):
        if isinstance(result, ProviderFailure):
            report.fail(page, result)
            page_cues.append(PageCues())
        else:
            page_cues.append(extract_cues(store, page, spans, result, report))

    budget = config.max_claims_per_page

    def call_writer(i):
        try:
            return invoke(
                "claim_writer",
                providers.claim_writer.write,
                pages[i],
                page_spans[i],
                page_cues[i],
                budget,
                timeout=providers.timeout,
            )
        except ProviderFailure as exc:
            return exc

    claim_results = _map(call_writer, list(range(len(pages))), workers)
    for page, cues, result in zip(pages, page_cues, claim_results):
        if isinstance(result, ProviderFailure):
            report.fail(page, result)
        else:
            write_claims(store, page, cues, result, budget, report)

    for view in build_views(store):
        store.add_view(view)
    return CompileResult(store, report)
