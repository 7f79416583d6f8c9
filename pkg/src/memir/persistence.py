"""Line-delimited JSON store files.

Layout: a header record, then one record per atom in insertion order, then
one record per view. Association sets are derived and rebuilt on load.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from memir.atoms import (
    ATOM_TYPES,
    AtomId,
    ClaimAtom,
    HandleAtom,
    MemoryAtom,
    PageAtom,
    PivotAtom,
    RetrievalView,
    SpanAtom,
    TimeAtom,
    TurnSlot,
)
from memir.errors import CorruptRecord, MemIRError, VersionMismatch
from memir.store import MemoryStore

FORMAT_VERSION = 1


def _ids(ids) -> list[str]:
    return [str(i) for i in ids]


def atom_to_record(atom: MemoryAtom) -> dict[str, Any]:
    rec: dict[str, Any] = {"record": "atom", "kind": atom.kind, "id": str(atom.id)}
    if isinstance(atom, PageAtom):
        rec.update(
            session_key=atom.session_key,
            turn_range=list(atom.turn_range),
            raw_text=atom.raw_text,
            timestamp_hint=atom.timestamp_hint,
            turn_layout=[[s.turn_index, s.speaker, s.start, s.end] for s in atom.turn_layout],
        )
    elif isinstance(atom, SpanAtom):
        rec.update(
            page_id=str(atom.page_id),
            speaker=atom.speaker,
            char_range=list(atom.char_range),
            verbatim_text=atom.verbatim_text,
        )
    elif isinstance(atom, HandleAtom):
        rec.update(surface_text=atom.surface_text, support_span_ids=_ids(atom.support_span_ids))
    elif isinstance(atom, TimeAtom):
        rec.update(
            surface_text=atom.surface_text,
            normalized=list(atom.normalized) if atom.normalized else None,
            relative_expression=atom.relative_expression,
            support_span_ids=_ids(atom.support_span_ids),
        )
    elif isinstance(atom, PivotAtom):
        rec.update(
            referent_label=atom.referent_label,
            support_span_ids=_ids(atom.support_span_ids),
            support_text=atom.support_text,
        )
    elif isinstance(atom, ClaimAtom):
        rec.update(
            claim_text=atom.claim_text,
            support_span_ids=_ids(atom.support_span_ids),
            linked_cue_ids=_ids(atom.linked_cue_ids),
        )
    return rec


def view_to_record(view: RetrievalView) -> dict[str, Any]:
    return {
        "record": "view",
        "view_id": view.view_id,
        "owner_atom_id": str(view.owner_atom_id),
        "view_kind": view.view_kind,
        "key_text": view.key_text,
        "target_claim_ids": _ids(view.target_claim_ids),
    }


def _str(rec: dict, key: str) -> str:
    value = rec[key]
    if not isinstance(value, str):
        raise TypeError(f"{key} must be a string")
    return value


def _opt_str(rec: dict, key: str):
    value = rec.get(key)
    if value is not None and not isinstance(value, str):
        raise TypeError(f"{key} must be a string or null")
    return value


def _int_pair(value) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2 or not all(type(v) is int for v in value):
        raise TypeError("expected a pair of integers")
    return (value[0], value[1])


def _id_list(rec: dict, key: str) -> tuple[AtomId, ...]:
    value = rec[key]
    if not isinstance(value, list):
        raise TypeError(f"{key} must be a list")
    return tuple(AtomId.parse(v) for v in value)


def atom_from_record(rec: dict[str, Any]) -> MemoryAtom:
    kind = rec.get("kind")
    if kind not in ATOM_TYPES:
        raise ValueError(f"unknown atom kind {kind!r}")
    atom_id = AtomId.parse(rec["id"])
    if kind == "page":
        layout = []
        for item in rec.get("turn_layout", []):
            idx, speaker, start, end = item
            if not isinstance(speaker, str) or not all(type(v) is int for v in (idx, start, end)):
                raise TypeError("bad turn_layout entry")
            layout.append(TurnSlot(idx, speaker, start, end))
        return PageAtom(
            atom_id,
            _str(rec, "session_key"),
            _int_pair(rec["turn_range"]),
            _str(rec, "raw_text"),
            _opt_str(rec, "timestamp_hint"),
            tuple(layout),
        )
    if kind == "span":
        return SpanAtom(
            atom_id,
            AtomId.parse(rec["page_id"]),
            _str(rec, "speaker"),
            _int_pair(rec["char_range"]),
            _str(rec, "verbatim_text"),
        )
    if kind == "handle":
        return HandleAtom(atom_id, _str(rec, "surface_text"), _id_list(rec, "support_span_ids"))
    if kind == "time":
        norm = rec.get("normalized")
        if norm is not None:
            if not isinstance(norm, list) or len(norm) != 2 or not all(isinstance(v, str) for v in norm):
                raise TypeError("normalized must be a pair of strings")
            norm = (norm[0], norm[1])
        return TimeAtom(
            atom_id,
            _str(rec, "surface_text"),
            norm,
            _opt_str(rec, "relative_expression"),
            _id_list(rec, "support_span_ids"),
        )
    if kind == "pivot":
        return PivotAtom(
            atom_id, _str(rec, "referent_label"), _id_list(rec, "support_span_ids"), _str(rec, "support_text")
        )
    return ClaimAtom(
        atom_id, _str(rec, "claim_text"), _id_list(rec, "support_span_ids"), _id_list(rec, "linked_cue_ids")
    )


def view_from_record(rec: dict[str, Any]) -> RetrievalView:
    return RetrievalView(
        _str(rec, "view_id"),
        AtomId.parse(rec["owner_atom_id"]),
        _str(rec, "view_kind"),
        _str(rec, "key_text"),
        _id_list(rec, "target_claim_ids"),
    )


def encode(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":"))


def dumps(store: MemoryStore) -> str:
    lines = [encode({"record": "header", "format_version": FORMAT_VERSION, "conversation_meta": store.conversation_meta})]
    lines.extend(encode(atom_to_record(a)) for a in store.atoms.values())
    lines.extend(encode(view_to_record(v)) for v in store.views)
    return "\n".join(lines) + "\n"


def loads(text: str) -> MemoryStore:
    store = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptRecord(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise CorruptRecord(lineno, "record is not an object")
        kind = rec.get("record")
        if store is None:
            if kind != "header":
                raise CorruptRecord(lineno, "first record must be the header")
            version = rec.get("format_version")
            if version != FORMAT_VERSION:
                raise VersionMismatch(f"store format_version {version!r}, expected {FORMAT_VERSION}")
            meta = rec.get("conversation_meta") or {}
            if not isinstance(meta, dict):
                raise CorruptRecord(lineno, "conversation_meta must be an object")
            store = MemoryStore(meta)
            continue
        try:
            if kind == "atom":
                store.add_atom(atom_from_record(rec))
            elif kind == "view":
                store.add_view(view_from_record(rec))
            else:
                raise ValueError(f"unknown record type {kind!r}")
        except (KeyError, TypeError, ValueError, MemIRError) as exc:
            reason = f"missing field {exc}" if isinstance(exc, KeyError) and not isinstance(exc, MemIRError) else str(exc)
            raise CorruptRecord(lineno, reason) from None
    if store is None:
        raise CorruptRecord(1, "empty file, header record missing")
    return store


def persist(store: MemoryStore, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(dumps(store), encoding="utf-8")
    return path


def load(path: Union[str, Path]) -> MemoryStore:
    return loads(Path(path).read_text(encoding="utf-8"))
