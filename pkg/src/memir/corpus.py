"""Corpus loaders: the line-delimited turn format and LoCoMo-shaped JSON."""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path
from typing import Union

from memir.compiler import InteractionHistory, Turn
from memir.errors import ParseError

log = logging.getLogger(__name__)

TURN_FIELDS = ("session", "speaker", "text", "timestamp", "image_caption")
_REQUIRED = ("session", "speaker", "text")


def parse_turn_record(rec, line: int) -> Turn:
    if not isinstance(rec, dict):
        raise ParseError(line, "record is not an object")
    for key in _REQUIRED:
        if not isinstance(rec.get(key), str):
            raise ParseError(line, f"field {key!r} missing or not text")
    for key in ("timestamp", "image_caption"):
        if rec.get(key) is not None and not isinstance(rec[key], str):
            raise ParseError(line, f"field {key!r} must be text")
    extra = sorted(set(rec) - set(TURN_FIELDS))
    if extra:
        log.warning("line %d: ignoring unknown fields %s", line, extra)
    return Turn(rec["session"], rec["speaker"], rec["text"], rec.get("timestamp"), rec.get("image_caption"))


def read_jsonl_corpus(text: str, conversation_id: str = "conversation") -> InteractionHistory:
    turns = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc.msg}") from None
        turns.append(parse_turn_record(rec, lineno))
    try:
        return InteractionHistory(turns, conversation_id)
    except ValueError as exc:
        raise ParseError(0, str(exc)) from None


def load_jsonl_corpus(path: Union[str, Path]) -> InteractionHistory:
    path = Path(path)
    return read_jsonl_corpus(path.read_text(encoding="utf-8"), path.stem)


_SESSION_RE = re.compile(r"^session_(\d+)$")
_LOCOMO_TOP = {"sample_id", "conversation", "qa", "event_summary", "observation", "session_summary"}
_LOCOMO_TURN = {"speaker", "dia_id", "text", "img_url", "blip_caption", "query", "re-download"}


def read_locomo(data, sample: int = 0) -> InteractionHistory:
    """Map one LoCoMo-style sample onto an interaction history.

    Sessions are ``conversation.session_<n>`` lists ordered by ``n``; the
    session timestamp comes from ``session_<n>_date_time``. A turn's
    ``blip_caption`` becomes its image caption.
    """
    if isinstance(data, list):
        if not data:
            return InteractionHistory([], "locomo")
        if not 0 <= sample < len(data):
            raise ParseError(0, f"sample {sample} out of range ({len(data)} samples)")
        data = data[sample]
    if not isinstance(data, dict) or not isinstance(data.get("conversation"), dict):
        raise ParseError(0, "expected an object with a 'conversation' object")
    unknown = sorted(set(data) - _LOCOMO_TOP)
    if unknown:
        log.warning("ignoring unknown top-level fields %s", unknown)
    conv = data["conversation"]
    sessions = sorted(
        (int(m.group(1)), key) for key in conv if (m := _SESSION_RE.match(key))
    )
    turns = []
    for n, key in sessions:
        stamp = conv.get(f"{key}_date_time")
        entries = conv[key]
        if not isinstance(entries, list):
            raise ParseError(0, f"{key} is not a list of turns")
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict) or not isinstance(entry.get("speaker"), str) or not isinstance(entry.get("text"), str):
                raise ParseError(0, f"{key}[{i}] lacks speaker/text")
            extra = sorted(set(entry) - _LOCOMO_TURN)
            if extra:
                log.warning("%s[%d]: ignoring unknown fields %s", key, i, extra)
            caption = entry.get("blip_caption")
            turns.append(Turn(key, entry["speaker"], entry["text"], stamp, caption if isinstance(caption, str) else None))
    return InteractionHistory(turns, str(data.get("sample_id", "locomo")))


def load_locomo_corpus(path: Union[str, Path], sample: int = 0) -> InteractionHistory:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, f"invalid JSON: {exc.msg}") from None
    return read_locomo(data, sample)


def load_corpus(path: Union[str, Path]) -> InteractionHistory:
    """JSON files are read as LoCoMo samples, anything else as turn records."""
    path = Path(path)
    if path.suffix == ".json":
        return load_locomo_corpus(path)
    return load_jsonl_corpus(path)
