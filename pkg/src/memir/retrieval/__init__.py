from memir.retrieval.bm25 import BM25Index
from memir.retrieval.dense import DenseTable, load_dense_table, save_dense_table
from memir.retrieval.fusion import FusedHit, fuse_rrf, rrf_term
from memir.retrieval.rewrite import rewrite_query
from memir.retrieval.routes import (
    ROUTES,
    IndexSet,
    RetrievalConfig,
    Route,
    RouteHit,
    build_indexes,
    merge_view_hits,
    route_topk,
)

__all__ = [
    "BM25Index",
    "DenseTable",
    "FusedHit",
    "IndexSet",
    "ROUTES",
    "RetrievalConfig",
    "Route",
    "RouteHit",
    "build_indexes",
    "fuse_rrf",
    "load_dense_table",
    "merge_view_hits",
    "rewrite_query",
    "route_topk",
    "rrf_term",
    "save_dense_table",
]
