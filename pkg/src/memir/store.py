"""The memory store: validated atoms, retrieval views and association sets."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Iterator, Optional, TypeVar

from memir.atoms import (
    CUE_TAGS,
    VIEW_KINDS,
    AtomId,
    ClaimAtom,
    HandleAtom,
    MemoryAtom,
    PageAtom,
    PivotAtom,
    RetrievalView,
    SpanAtom,
    TAG_TO_TYPE,
    TimeAtom,
)
from memir.errors import (
    DanglingReference,
    DuplicateId,
    InvalidAtom,
    NotAClaim,
    SupportViolation,
    UnknownId,
)

A = TypeVar("A")

MAX_CLAIM_SUPPORT = 3


class MemoryStore:
    """Append-only collection of atoms and views.

    Every mutation goes through :meth:`add_atom` / :meth:`add_view`, which
    enforce the support constraint and referential integrity, so a store
    can never hold an atom whose grounding is missing or non-span.
    """

    def __init__(self, conversation_meta: Optional[dict] = None):
        self.atoms: dict[AtomId, MemoryAtom] = {}
        self.views: list[RetrievalView] = []
        self.association_sets: dict[AtomId, frozenset[AtomId]] = {}
        self.conversation_meta: dict = dict(conversation_meta or {})
        self._view_ids: set[str] = set()
        self._claims_by_member: dict[AtomId, list[AtomId]] = defaultdict(list)
        self._spans_by_page: dict[AtomId, list[AtomId]] = defaultdict(list)
        self._claims_by_page: dict[AtomId, list[AtomId]] = defaultdict(list)
        self._page_turns: list[tuple[int, int, AtomId]] = []

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom_id: object) -> bool:
        return atom_id in self.atoms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemoryStore):
            return NotImplemented
        return (
            list(self.atoms.items()) == list(other.atoms.items())
            and self.views == other.views
            and self.conversation_meta == other.conversation_meta
        )

    def __repr__(self) -> str:
        return f"MemoryStore({len(self.atoms)} atoms, {len(self.views)} views)"

    # -- reads ---------------------------------------------------------------

    def get(self, atom_id: AtomId) -> MemoryAtom:
        try:
            return self.atoms[atom_id]
        except KeyError:
            raise UnknownId(f"unknown atom id {atom_id}") from None

    def iter_kind(self, cls: type[A]) -> Iterator[A]:
        return (a for a in self.atoms.values() if isinstance(a, cls))

    def pages(self) -> list[PageAtom]:
        return list(self.iter_kind(PageAtom))

    def claims(self) -> list[ClaimAtom]:
        return list(self.iter_kind(ClaimAtom))

    def spans_of(self, page_id: AtomId) -> list[AtomId]:
        return list(self._spans_by_page.get(page_id, ()))

    def claims_of(self, page_id: AtomId) -> list[AtomId]:
        return list(self._claims_by_page.get(page_id, ()))

    def claims_containing(self, atom_id: AtomId) -> list[AtomId]:
        """Claims whose association set contains ``atom_id``, in insertion order."""
        return list(self._claims_by_member.get(atom_id, ()))

    def association_set(self, claim_id: AtomId) -> frozenset[AtomId]:
        atom = self.get(claim_id)
        if not isinstance(atom, ClaimAtom):
            raise NotAClaim(f"{claim_id} is a {atom.kind}, not a claim")
        return self.association_sets[claim_id]

    def page_of(self, atom_id: AtomId) -> PageAtom:
        return self.get(atom_id.page_id)

    # -- writes --------------------------------------------------------------

    def add_atom(self, atom: MemoryAtom) -> AtomId:
        expected = TAG_TO_TYPE.get(atom.id.kind_tag)
        if expected is not type(atom):
            raise InvalidAtom(f"id {atom.id} does not match atom kind {atom.kind}")
        if atom.id in self.atoms:
            raise DuplicateId(str(atom.id))

        if isinstance(atom, PageAtom):
            self._check_page(atom)
        elif isinstance(atom, SpanAtom):
            self._check_span(atom)
        elif isinstance(atom, ClaimAtom):
            self._check_claim(atom)
        else:
            self._check_cue(atom)

        self.atoms[atom.id] = atom
        if isinstance(atom, PageAtom):
            self._page_turns.append((atom.turn_range[0], atom.turn_range[1], atom.id))
        elif isinstance(atom, SpanAtom):
            self._spans_by_page[atom.page_id].append(atom.id)
        elif isinstance(atom, ClaimAtom):
            omega = frozenset(atom.support_span_ids) | frozenset(atom.linked_cue_ids)
            self.association_sets[atom.id] = omega
            for member in sorted(omega):
                self._claims_by_member[member].append(atom.id)
            self._claims_by_page[atom.id.page_id].append(atom.id)
        return atom.id

    def add_view(self, view: RetrievalView) -> None:
        if view.view_kind not in VIEW_KINDS:
            raise InvalidAtom(f"unknown view kind {view.view_kind!r}")
        if view.view_id in self._view_ids:
            raise DuplicateId(view.view_id)
        if view.owner_atom_id not in self.atoms:
            raise DanglingReference(f"view {view.view_id} owner {view.owner_atom_id} missing")
        for target in view.target_claim_ids:
            if target not in self.atoms:
                raise DanglingReference(f"view {view.view_id} target {target} missing")
            if not isinstance(self.atoms[target], ClaimAtom):
                raise InvalidAtom(f"view {view.view_id} targets non-claim {target}")
        self.views.append(view)
        self._view_ids.add(view.view_id)

    def extend(self, atoms: Iterable[MemoryAtom]) -> None:
        for atom in atoms:
            self.add_atom(atom)

    # -- validation ----------------------------------------------------------

    def _check_page(self, page: PageAtom) -> None:
        lo, hi = page.turn_range
        if lo < 0 or hi < lo:
            raise InvalidAtom(f"page {page.id} has bad turn range {page.turn_range}")
        for other_lo, other_hi, other_id in self._page_turns:
            if lo <= other_hi and other_lo <= hi:
                raise InvalidAtom(f"page {page.id} turns overlap page {other_id}")
        n = len(page.raw_text)
        for slot in page.turn_layout:
            if not 0 <= slot.start <= slot.end <= n:
                raise InvalidAtom(f"page {page.id} turn slot out of range")

    def _check_span(self, span: SpanAtom) -> None:
        page = self.atoms.get(span.page_id)
        if page is None:
            raise DanglingReference(f"span {span.id} cites missing page {span.page_id}")
        if not isinstance(page, PageAtom):
            raise InvalidAtom(f"span {span.id} page_id {span.page_id} is not a page")
        if span.id.page_ordinal != span.page_id.page_ordinal:
            raise InvalidAtom(f"span {span.id} id disagrees with page {span.page_id}")
        start, end = span.char_range
        if not 0 <= start < end <= len(page.raw_text):
            raise InvalidAtom(f"span {span.id} char range {span.char_range} out of bounds")
        if page.raw_text[start:end] != span.verbatim_text:
            raise InvalidAtom(f"span {span.id} text differs from page substring")

    def _check_support(self, atom_id: AtomId, support: tuple[AtomId, ...]) -> list[SpanAtom]:
        if not support:
            raise SupportViolation(f"{atom_id} has empty support")
        spans = []
        for sid in support:
            if not isinstance(sid, AtomId):
                raise SupportViolation(f"{atom_id} support entry {sid!r} is not an atom id")
            if sid.kind_tag != "S":
                raise SupportViolation(f"{atom_id} cites non-span {sid} as support")
            span = self.atoms.get(sid)
            if span is None:
                raise DanglingReference(f"{atom_id} cites missing span {sid}")
            spans.append(span)
        if len(set(support)) != len(support):
            raise SupportViolation(f"{atom_id} repeats a support span")
        return spans

    def _check_cue(self, atom: MemoryAtom) -> None:
        spans = self._check_support(atom.id, atom.support_span_ids)
        if isinstance(atom, HandleAtom):
            if not atom.surface_text or not any(atom.surface_text in s.verbatim_text for s in spans):
                raise InvalidAtom(f"handle {atom.id} surface is not a substring of its support")
        elif isinstance(atom, PivotAtom):
            if not atom.support_text or not any(atom.support_text in s.verbatim_text for s in spans):
                raise InvalidAtom(f"pivot {atom.id} support_text is not a substring of its support")
            if not atom.referent_label:
                raise InvalidAtom(f"pivot {atom.id} has an empty label")
        elif isinstance(atom, TimeAtom):
            if atom.normalized is None and not atom.relative_expression:
                raise InvalidAtom(f"time {atom.id} has neither normalized nor relative form")
            if not atom.surface_text:
                raise InvalidAtom(f"time {atom.id} has empty surface")

    def _check_claim(self, claim: ClaimAtom) -> None:
        spans = self._check_support(claim.id, claim.support_span_ids)
        if len(spans) > MAX_CLAIM_SUPPORT:
            raise SupportViolation(f"claim {claim.id} cites {len(spans)} spans (max {MAX_CLAIM_SUPPORT})")
        if not any(s.page_id.page_ordinal == claim.id.page_ordinal for s in spans):
            raise SupportViolation(f"claim {claim.id} cites no span on its own page")
        if not claim.claim_text or not claim.claim_text.strip():
            raise InvalidAtom(f"claim {claim.id} has empty text")
        for cue_id in claim.linked_cue_ids:
            if not isinstance(cue_id, AtomId) or cue_id.kind_tag not in CUE_TAGS:
                raise InvalidAtom(f"claim {claim.id} links non-cue {cue_id}")
            if cue_id not in self.atoms:
                raise DanglingReference(f"claim {claim.id} links missing cue {cue_id}")
        if len(set(claim.linked_cue_ids)) != len(claim.linked_cue_ids):
            raise InvalidAtom(f"claim {claim.id} repeats a linked cue")


def check_invariants(store: MemoryStore) -> list[str]:
    """Full-store scan; returns human-readable violations (empty when clean)."""
    problems = []
    span_ids = {a.id for a in store.iter_kind(SpanAtom)}
    for atom in store.atoms.values():
        if isinstance(atom, (PageAtom, SpanAtom)):
            continue
        support = atom.support_span_ids
        if not support:
            problems.append(f"{atom.id}: empty support")
        elif not set(support) <= span_ids:
            problems.append(f"{atom.id}: support not span-only")
    for claim in store.iter_kind(ClaimAtom):
        omega = store.association_sets.get(claim.id)
        if omega is None:
            problems.append(f"{claim.id}: no association set")
            continue
        if not set(claim.support_span_ids) <= omega:
            problems.append(f"{claim.id}: association set misses support")
        if any(m.kind_tag in ("P", "C") for m in omega):
            problems.append(f"{claim.id}: association set holds a page or claim")
    for view in store.views:
        if view.owner_atom_id not in store.atoms:
            problems.append(f"view {view.view_id}: dangling owner")
        for t in view.target_claim_ids:
            if not isinstance(store.atoms.get(t), ClaimAtom):
                problems.append(f"view {view.view_id}: bad target {t}")
    return problems
