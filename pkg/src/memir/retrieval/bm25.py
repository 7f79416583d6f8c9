"""Okapi BM25 over an in-memory inverted index."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Iterable, Sequence


class BM25Index:
    """Inverted index over pre-tokenized documents.

    Scoring uses the non-negative idf ``ln(1 + (N - df + 0.5) / (df + 0.5))``
    and sums over the distinct query terms.
    """

    def __init__(self, documents: Sequence[Sequence[str]], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.n_docs = len(documents)
        self.doc_len = [len(d) for d in documents]
        self.avgdl = sum(self.doc_len) / self.n_docs if self.n_docs else 0.0
        self.postings: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for i, doc in enumerate(documents):
            for term, tf in Counter(doc).items():
                self.postings[term].append((i, tf))
        self.postings = dict(self.postings)

    def __len__(self) -> int:
        return self.n_docs

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc: int) -> int:
        for i, tf in self.postings.get(term, ()):
            if i == doc:
                return tf
        return 0

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def scores(self, query_terms: Iterable[str]) -> dict[int, float]:
        """Scores of every document sharing at least one query term."""
        out: dict[int, float] = {}
        if self.avgdl == 0:
            return out
        k1, b = self.k1, self.b
        for term in dict.fromkeys(query_terms):
            plist = self.postings.get(term)
            if not plist:
                continue
            idf = self.idf(term)
            for doc, tf in plist:
                norm = k1 * (1.0 - b + b * self.doc_len[doc] / self.avgdl)
                out[doc] = out.get(doc, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
        return out
