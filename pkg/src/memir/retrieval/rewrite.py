"""Surface-form rewriting of queries for the sparse routes."""

from __future__ import annotations

from typing import Optional

from memir.temporal import render_dates
from memir.text import function_words, tokenize


def rewrite_query(query: str, table: Optional[frozenset[str]] = None) -> list[str]:
    """Variants: original, lowercased, function-word-stripped, date-normalized.

    Duplicates are dropped; the original always comes first.
    """
    table = function_words() if table is None else table
    lowered = query.lower()
    stripped = " ".join(t for t in tokenize(query) if t not in table)
    temporal = render_dates(query).lower()
    variants: list[str] = []
    for v in (query, lowered, stripped, temporal):
        if v not in variants:
            variants.append(v)
    return variants
