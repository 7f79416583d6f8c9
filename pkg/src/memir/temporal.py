"""Deterministic detection and normalization of time expressions.

Absolute dates normalize without context. Relative expressions ("last
Friday", "two weeks ago") normalize only when an anchor date is known,
and always keep their verbatim wording.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Optional

from memir.atoms import render_interval

MONTHS = {
    "january": 1, "jan": 1, "february": 2, "feb": 2, "march": 3, "mar": 3,
    "april": 4, "apr": 4, "may": 5, "june": 6, "jun": 6, "july": 7, "jul": 7,
    "august": 8, "aug": 8, "september": 9, "sep": 9, "sept": 9, "october": 10,
    "oct": 10, "november": 11, "nov": 11, "december": 12, "dec": 12,
}
WEEKDAYS = {
    "monday": 0, "tuesday": 1, "wednesday": 2, "thursday": 3,
    "friday": 4, "saturday": 5, "sunday": 6,
}
NUMBER_WORDS = {
    "a": 1, "an": 1, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "a couple of": 2,
    "couple of": 2, "a few": 3, "few": 3, "several": 3,
}

_MONTH = r"(?:" + "|".join(sorted(MONTHS, key=len, reverse=True)) + r")"
_MONTH_CAP = r"(?:" + "|".join(sorted((m.capitalize() for m in MONTHS), key=len, reverse=True)) + r")"
_WEEKDAY = r"(?:monday|tuesday|wednesday|thursday|friday|saturday|sunday)"
_WEEKDAY_CAP = r"(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday)"
_ORD = r"(?:st|nd|rd|th)?"
_NUM = r"(?:\d+|" + "|".join(sorted((re.escape(k) for k in NUMBER_WORDS), key=len, reverse=True)) + r")"
_PERIOD = r"(?:week|weekend|month|year|night|morning|afternoon|evening|summer|winter|spring|fall|autumn)"

# (name, compiled pattern); earlier entries win ties on equal span length.
_PATTERNS = [
    ("iso", re.compile(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b")),
    ("dmy", re.compile(rf"\b(\d{{1,2}}){_ORD}\s+(?:of\s+)?({_MONTH})\.?,?\s+(\d{{4}})\b", re.I)),
    ("mdy", re.compile(rf"\b({_MONTH})\.?\s+(\d{{1,2}}){_ORD},?\s+(\d{{4}})\b", re.I)),
    ("my", re.compile(rf"\b({_MONTH_CAP})\s+(\d{{4}})\b")),
    ("dm", re.compile(rf"\b(\d{{1,2}}){_ORD}\s+(?:of\s+)?({_MONTH_CAP})\b")),
    ("md", re.compile(rf"\b({_MONTH_CAP})\s+(\d{{1,2}}){_ORD}\b(?!:)")),
    ("day_rel", re.compile(r"\b(the day before yesterday|the day after tomorrow|yesterday|today|tonight|tomorrow)\b", re.I)),
    ("shift_weekday", re.compile(rf"\b(last|next|this|past|coming)\s+({_WEEKDAY})\b", re.I)),
    ("shift_period", re.compile(rf"\b(last|next|this|past|coming)\s+({_PERIOD})\b", re.I)),
    ("ago", re.compile(rf"\b({_NUM})\s+(days?|weeks?|months?|years?)\s+ago\b", re.I)),
    ("clock", re.compile(r"\b(\d{1,2})(?::(\d{2}))?\s*(am|pm|a\.m\.|p\.m\.)(?!\w)", re.I)),
    ("weekday", re.compile(rf"\b({_WEEKDAY_CAP})\b")),
    ("year", re.compile(r"(?<=\bin )((?:19|20)\d{2})\b")),
    ("vague", re.compile(r"\b(recently|lately)\b", re.I)),
]

ABSOLUTE_KINDS = frozenset({"iso", "dmy", "mdy", "my", "year"})


@dataclass(frozen=True)
class TimeMatch:
    start: int
    end: int
    surface: str
    normalized: Optional[tuple[str, str]]
    relative_expression: Optional[str]
    pattern: str


def parse_anchor(value: Optional[str]) -> Optional[date]:
    """Parse a stored timestamp hint (ISO date or datetime) into a date."""
    if not value:
        return None
    try:
        return datetime.fromisoformat(value).date()
    except ValueError:
        try:
            return date.fromisoformat(value[:10])
        except ValueError:
            return None


_LOCOMO_FORMATS = ("%I:%M %p on %d %B, %Y", "%I:%M %p on %d %b, %Y", "%d %B, %Y", "%d %B %Y", "%B %d, %Y")


def parse_timestamp(value: Optional[str]) -> Optional[str]:
    """Normalize a corpus timestamp to an ISO string, or None if unparseable."""
    if not value:
        return None
    value = value.strip()
    try:
        return datetime.fromisoformat(value).isoformat()
    except ValueError:
        pass
    for fmt in _LOCOMO_FORMATS:
        try:
            return datetime.strptime(value, fmt).isoformat()
        except ValueError:
            continue
    return None


def _day(d: date) -> tuple[str, str]:
    iso = d.isoformat()
    return (iso, iso)


def _span(a: date, b: date) -> tuple[str, str]:
    return (a.isoformat(), b.isoformat())


def _month_interval(year: int, month: int) -> tuple[str, str]:
    last = calendar.monthrange(year, month)[1]
    return _span(date(year, month, 1), date(year, month, last))


def _add_months(year: int, month: int, delta: int) -> tuple[int, int]:
    idx = year * 12 + (month - 1) + delta
    return idx // 12, idx % 12 + 1


def _safe_date(y: int, m: int, d: int) -> Optional[date]:
    try:
        return date(y, m, d)
    except ValueError:
        return None


def _number(word: str) -> int:
    word = word.lower()
    if word.isdigit():
        return int(word)
    return NUMBER_WORDS[word]


def _normalize(kind: str, m: re.Match, anchor: Optional[date]) -> Optional[tuple[str, str]]:
    g = m.groups()
    if kind == "iso":
        d = _safe_date(int(g[0]), int(g[1]), int(g[2]))
        return _day(d) if d else None
    if kind == "dmy":
        d = _safe_date(int(g[2]), MONTHS[g[1].lower()], int(g[0]))
        return _day(d) if d else None
    if kind == "mdy":
        d = _safe_date(int(g[2]), MONTHS[g[0].lower()], int(g[1]))
        return _day(d) if d else None
    if kind == "my":
        return _month_interval(int(g[1]), MONTHS[g[0].lower()])
    if kind == "year":
        y = int(g[0])
        return _span(date(y, 1, 1), date(y, 12, 31))
    if anchor is None:
        return None
    if kind in ("dm", "md"):
        day, month = (g[0], g[1]) if kind == "dm" else (g[1], g[0])
        d = _safe_date(anchor.year, MONTHS[month.lower()], int(day))
        return _day(d) if d else None
    if kind == "day_rel":
        offsets = {
            "the day before yesterday": -2, "yesterday": -1, "today": 0,
            "tonight": 0, "tomorrow": 1, "the day after tomorrow": 2,
        }
        return _day(anchor + timedelta(days=offsets[g[0].lower()]))
    if kind == "shift_weekday":
        shift, wd = g[0].lower(), WEEKDAYS[g[1].lower()]
        if shift in ("last", "past"):
            back = (anchor.weekday() - wd) % 7 or 7
            return _day(anchor - timedelta(days=back))
        if shift in ("next", "coming"):
            ahead = (wd - anchor.weekday()) % 7 or 7
            return _day(anchor + timedelta(days=ahead))
        return _day(anchor + timedelta(days=wd - anchor.weekday()))
    if kind == "shift_period":
        shift, period = g[0].lower(), g[1].lower()
        step = {"last": -1, "past": -1, "this": 0, "next": 1, "coming": 1}[shift]
        if period == "week":
            monday = anchor - timedelta(days=anchor.weekday()) + timedelta(weeks=step)
            return _span(monday, monday + timedelta(days=6))
        if period == "weekend":
            saturday = anchor - timedelta(days=anchor.weekday()) + timedelta(days=5, weeks=step)
            return _span(saturday, saturday + timedelta(days=1))
        if period == "month":
            return _month_interval(*_add_months(anchor.year, anchor.month, step))
        if period == "year":
            y = anchor.year + step
            return _span(date(y, 1, 1), date(y, 12, 31))
        if period == "night" and step == -1:
            return _day(anchor - timedelta(days=1))
        if period in ("night", "morning", "afternoon", "evening") and step == 0:
            return _day(anchor)
        return None
    if kind == "ago":
        n, unit = _number(g[0]), g[1].lower().rstrip("s")
        if unit == "day":
            return _day(anchor - timedelta(days=n))
        if unit == "week":
            return _day(anchor - timedelta(weeks=n))
        if unit == "month":
            return _month_interval(*_add_months(anchor.year, anchor.month, -n))
        y = anchor.year - n
        return _span(date(y, 1, 1), date(y, 12, 31))
    return None


def find_time_expressions(text: str, anchor: Optional[date] = None) -> list[TimeMatch]:
    """All non-overlapping time expressions in ``text``, left to right.

    Overlaps resolve to the longest match; equal lengths keep the earlier
    pattern in the table.
    """
    candidates = []
    for priority, (kind, pattern) in enumerate(_PATTERNS):
        for m in pattern.finditer(text):
            candidates.append((m.start(), -(m.end() - m.start()), priority, kind, m))
    candidates.sort(key=lambda c: (c[1], c[0], c[2]))

    taken: list[tuple[int, int]] = []
    chosen = []
    for start, neg_len, _, kind, m in candidates:
        end = start - neg_len
        if any(start < e and s < end for s, e in taken):
            continue
        taken.append((start, end))
        normalized = _normalize(kind, m, anchor)
        relative = None if kind in ABSOLUTE_KINDS else m.group(0)
        if normalized is None and relative is None:
            continue
        chosen.append(TimeMatch(start, end, m.group(0), normalized, relative, kind))
    chosen.sort(key=lambda t: t.start)
    return chosen


def render_dates(text: str) -> str:
    """Replace absolute date expressions with their ISO rendering."""
    out = []
    last = 0
    for match in find_time_expressions(text):
        if match.pattern not in ABSOLUTE_KINDS or match.normalized is None:
            continue
        out.append(text[last:match.start])
        out.append(render_interval(match.normalized))
        last = match.end
    out.append(text[last:])
    return "".join(out)
