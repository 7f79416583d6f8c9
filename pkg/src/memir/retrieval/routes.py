"""Retrieval routes: sparse BM25 over views, dense cosine over claims/spans."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from memir.atoms import AtomId, ClaimAtom, SpanAtom
from memir.errors import EmbedderDimensionMismatch, MixedRoutes, UnknownRoute
from memir.providers.base import Embedder
from memir.retrieval.bm25 import BM25Index
from memir.retrieval.dense import DenseTable
from memir.retrieval.rewrite import rewrite_query
from memir.store import MemoryStore
from memir.text import tokenize


class Route(str, Enum):
    SPARSE_CLAIM = "sparse_claim"
    SPARSE_SPAN = "sparse_span"
    SPARSE_HANDLE = "sparse_handle"
    SPARSE_TIME = "sparse_time"
    SPARSE_PIVOT = "sparse_pivot"
    DENSE_CLAIM = "dense_claim"
    DENSE_SPAN = "dense_span"

    @property
    def is_sparse(self) -> bool:
        return self.value.startswith("sparse_")

    def __str__(self) -> str:
        return self.value


ROUTES = tuple(Route)

SPARSE_VIEW_KINDS = {
    Route.SPARSE_CLAIM: ("claim_text",),
    Route.SPARSE_SPAN: ("span_text", "span_context"),
    Route.SPARSE_HANDLE: ("handle_alias",),
    Route.SPARSE_TIME: ("time_key",),
    Route.SPARSE_PIVOT: ("pivot_key",),
}


def as_route(value) -> Route:
    try:
        return Route(value)
    except ValueError:
        raise UnknownRoute(f"unknown route {value!r}") from None


@dataclass(frozen=True)
class RetrievalConfig:
    per_route_k: int = 32
    rrf_k: float = 60.0
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    dense_dim: int = 1024

    def __post_init__(self):
        if self.per_route_k < 1:
            raise ValueError("per_route_k must be >= 1")
        if not self.rrf_k > 0:
            raise ValueError("rrf_k must be > 0")
        if self.dense_dim < 1:
            raise ValueError("dense_dim must be >= 1")


@dataclass(frozen=True)
class RouteHit:
    route: Route
    atom_id: AtomId
    rank: int
    raw_score: float
    view_id: Optional[str] = None


@dataclass
class SparseIndex:
    route: Route
    view_ids: list[str]
    owners: list[AtomId]
    bm25: BM25Index

    def __len__(self) -> int:
        return len(self.view_ids)


@dataclass
class IndexSet:
    sparse: dict[Route, SparseIndex]
    dense: dict[Route, DenseTable]
    embedder: Embedder

    def __getitem__(self, route: Route):
        route = as_route(route)
        return self.sparse[route] if route.is_sparse else self.dense[route]


def build_indexes(store: MemoryStore, embedder: Embedder, config: RetrievalConfig = RetrievalConfig()) -> IndexSet:
    if embedder.dim != config.dense_dim:
        raise EmbedderDimensionMismatch(f"embedder dim {embedder.dim} != configured {config.dense_dim}")
    sparse = {}
    for route, kinds in SPARSE_VIEW_KINDS.items():
        views = [v for v in store.views if v.view_kind in kinds]
        docs = [tokenize(v.key_text) for v in views]
        sparse[route] = SparseIndex(
            route,
            [v.view_id for v in views],
            [v.owner_atom_id for v in views],
            BM25Index(docs, config.bm25_k1, config.bm25_b),
        )

    def table(atoms_and_text) -> DenseTable:
        ids, vecs = [], []
        for atom_id, text in atoms_and_text:
            vec = np.asarray(embedder.embed(text), dtype=np.float64)
            if vec.shape != (config.dense_dim,):
                raise EmbedderDimensionMismatch(f"embedder returned shape {vec.shape} for {atom_id}")
            ids.append(atom_id)
            vecs.append(vec)
        matrix = np.vstack(vecs) if vecs else np.zeros((0, config.dense_dim))
        return DenseTable(ids, matrix)

    dense = {
        Route.DENSE_CLAIM: table((c.id, c.claim_text) for c in store.iter_kind(ClaimAtom)),
        Route.DENSE_SPAN: table((s.id, s.verbatim_text) for s in store.iter_kind(SpanAtom)),
    }
    return IndexSet(sparse, dense, embedder)


def route_topk(
    query: str,
    route,
    indexes: IndexSet,
    config: RetrievalConfig = RetrievalConfig(),
    variants: Optional[Sequence[str]] = None,
    query_vec: Optional[np.ndarray] = None,
) -> list[RouteHit]:
    """Top-K hits of one route. Sparse hits are view-level, dense atom-level."""
    route = as_route(route)
    k = config.per_route_k
    if route.is_sparse:
        index = indexes.sparse[route]
        best: dict[int, float] = {}
        for variant in variants if variants is not None else rewrite_query(query):
            for doc, score in index.bm25.scores(tokenize(variant)).items():
                if score > best.get(doc, 0.0):
                    best[doc] = score
        ranked = sorted(best, key=lambda d: (-best[d], index.owners[d], index.view_ids[d]))[:k]
        return [
            RouteHit(route, index.owners[d], r, best[d], index.view_ids[d])
            for r, d in enumerate(ranked, start=1)
        ]
    if query_vec is None:
        query_vec = indexes.embedder.embed(query)
    found = indexes.dense[route].search(np.asarray(query_vec, dtype=np.float64), k)
    return [RouteHit(route, atom_id, r, score) for r, (atom_id, score) in enumerate(found, start=1)]


def merge_view_hits(hits: Sequence[RouteHit]) -> list[RouteHit]:
    """Collapse view-level hits to one hit per owner atom (best rank wins)."""
    if not hits:
        return []
    routes = {h.route for h in hits}
    if len(routes) > 1:
        raise MixedRoutes(f"hits from several routes: {sorted(map(str, routes))}")
    if not hits[0].route.is_sparse:
        return list(hits)
    best: dict[AtomId, RouteHit] = {}
    for h in hits:
        cur = best.get(h.atom_id)
        if cur is None or h.rank < cur.rank:
            best[h.atom_id] = h
    ordered = sorted(best.values(), key=lambda h: (h.rank, h.atom_id))
    return [
        RouteHit(h.route, h.atom_id, r, h.raw_score, h.view_id) for r, h in enumerate(ordered, start=1)
    ]
