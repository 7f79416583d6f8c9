"""Typed memory atoms and their identifiers.

Atom ids render as ``{kind_tag}{page_ordinal}:{local_ordinal:02d}``, for
example ``C23:01`` is the second claim written for page 23.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

KIND_TAGS = ("P", "S", "H", "T", "V", "C")

_ID_RE = re.compile(r"^([PSHTVC])(\d+):(\d{2,})$")


@dataclass(frozen=True, order=True)
class AtomId:
    kind_tag: str
    page_ordinal: int
    local_ordinal: int

    def __post_init__(self):
        if self.kind_tag not in KIND_TAGS:
            raise ValueError(f"unknown kind tag {self.kind_tag!r}")
        if self.page_ordinal < 0 or self.local_ordinal < 0:
            raise ValueError("ordinals must be non-negative")

    def __str__(self) -> str:
        return f"{self.kind_tag}{self.page_ordinal}:{self.local_ordinal:02d}"

    @classmethod
    def parse(cls, text: str) -> "AtomId":
        if isinstance(text, AtomId):
            return text
        if not isinstance(text, str):
            raise ValueError(f"atom id must be a string, got {type(text).__name__}")
        m = _ID_RE.match(text)
        if m is None:
            raise ValueError(f"malformed atom id {text!r}")
        return cls(m.group(1), int(m.group(2)), int(m.group(3)))

    @property
    def page_id(self) -> "AtomId":
        return AtomId("P", self.page_ordinal, 0)


@dataclass(frozen=True)
class TurnSlot:
    """Where one dialogue turn's text sits inside its page's raw text."""

    turn_index: int
    speaker: str
    start: int
    end: int


@dataclass(frozen=True)
class PageAtom:
    id: AtomId
    session_key: str
    turn_range: tuple[int, int]
    raw_text: str
    timestamp_hint: Optional[str] = None
    turn_layout: tuple[TurnSlot, ...] = ()

    kind = "page"
    tag = "P"

    def turn_at(self, offset: int) -> Optional[TurnSlot]:
        for slot in self.turn_layout:
            if slot.start <= offset < slot.end:
                return slot
        return None


@dataclass(frozen=True)
class SpanAtom:
    id: AtomId
    page_id: AtomId
    speaker: str
    char_range: tuple[int, int]
    verbatim_text: str

    kind = "span"
    tag = "S"


@dataclass(frozen=True)
class HandleAtom:
    id: AtomId
    surface_text: str
    support_span_ids: tuple[AtomId, ...]

    kind = "handle"
    tag = "H"


@dataclass(frozen=True)
class TimeAtom:
    id: AtomId
    surface_text: str
    normalized: Optional[tuple[str, str]]
    relative_expression: Optional[str]
    support_span_ids: tuple[AtomId, ...]

    kind = "time"
    tag = "T"

    def render(self) -> str:
        if self.normalized is None:
            return self.surface_text
        return f"{self.surface_text} [{render_interval(self.normalized)}]"


@dataclass(frozen=True)
class PivotAtom:
    id: AtomId
    referent_label: str
    support_span_ids: tuple[AtomId, ...]
    support_text: str

    kind = "pivot"
    tag = "V"


@dataclass(frozen=True)
class ClaimAtom:
    id: AtomId
    claim_text: str
    support_span_ids: tuple[AtomId, ...]
    linked_cue_ids: tuple[AtomId, ...] = ()

    kind = "claim"
    tag = "C"


VIEW_KINDS = ("claim_text", "span_text", "handle_alias", "time_key", "pivot_key", "span_context")


@dataclass(frozen=True)
class RetrievalView:
    view_id: str
    owner_atom_id: AtomId
    view_kind: str
    key_text: str
    target_claim_ids: tuple[AtomId, ...] = field(default=())


MemoryAtom = Union[PageAtom, SpanAtom, HandleAtom, TimeAtom, PivotAtom, ClaimAtom]
CueAtom = Union[HandleAtom, TimeAtom, PivotAtom]

ATOM_TYPES: dict[str, type] = {
    cls.kind: cls for cls in (PageAtom, SpanAtom, HandleAtom, TimeAtom, PivotAtom, ClaimAtom)
}
TAG_TO_TYPE: dict[str, type] = {cls.tag: cls for cls in ATOM_TYPES.values()}
CUE_TAGS = frozenset("HTV")


def render_interval(interval: tuple[str, str]) -> str:
    start, end = interval
    return start if start == end else f"{start}..{end}"


def sup(atom: MemoryAtom) -> tuple[AtomId, ...]:
    """Span ids grounding ``atom``; a span grounds itself, pages have none."""
    if isinstance(atom, PageAtom):
        return ()
    if isinstance(atom, SpanAtom):
        return (atom.id,)
    return atom.support_span_ids
