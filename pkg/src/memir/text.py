"""Tokenization, sentence splitting and the shipped word lists."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "mt", "e.g", "i.e", "a.m", "p.m", "approx", "no"}
)

# Closing quotes/brackets that may trail terminal punctuation.
_CLOSERS = "\"')]}”’"


def tokenize(text: str) -> list[str]:
    """Lowercase Unicode word tokens, no stemming."""
    return _TOKEN_RE.findall(text.lower())


def _load_word_list(name: str) -> frozenset[str]:
    raw = resources.files("memir.assets").joinpath(name).read_text(encoding="utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if not line or (line.startswith("#") and len(line) > 1):
            continue
        words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=None)
def function_words() -> frozenset[str]:
    return _load_word_list("function_words.txt")


@lru_cache(maxsize=None)
def event_verbs() -> frozenset[str]:
    return _load_word_list("event_verbs.txt")


def content_words(text: str, table: frozenset[str] | None = None) -> set[str]:
    table = function_words() if table is None else table
    return {t for t in tokenize(text) if t not in table}


def _is_abbreviation(text: str, dot: int) -> bool:
    # word immediately before the '.' at index ``dot``
    j = dot
    while j > 0 and (text[j - 1].isalnum() or text[j - 1] == "."):
        j -= 1
    word = text[j:dot].lower()
    if word in ABBREVIATIONS:
        return True
    # single letters such as initials ("J. K. Rowling")
    return len(word) == 1 and word.isalpha() and text[j].isupper()


def sentence_bounds(text: str) -> list[tuple[int, int]]:
    """Split ``text`` into sentence ranges with surrounding whitespace trimmed.

    A boundary follows a run of ``.?!`` (plus closing quotes/brackets) that
    is followed by whitespace or the end of text, or any newline.
    Periods after known abbreviations or initials do not end a sentence.
    """
    bounds = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch == "\n":
            bounds.append((start, i))
            start = i + 1
            i += 1
            continue
        if ch in ".?!":
            j = i
            while j < n and text[j] in ".?!":
                j += 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            at_break = j >= n or text[j].isspace()
            single_period = j - i == 1 and ch == "."
            if at_break and not (single_period and _is_abbreviation(text, i)):
                bounds.append((start, j))
                start = j
            i = j
            continue
        i += 1
    bounds.append((start, n))

    out = []
    for s, e in bounds:
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s < e:
            out.append((s, e))
    return out


def split_sentences(text: str) -> list[str]:
    return [text[s:e] for s, e in sentence_bounds(text)]
