"""Reciprocal rank fusion of atom-level route hits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from memir.atoms import AtomId
from memir.retrieval.routes import ROUTES, Route, RouteHit, as_route


@dataclass(frozen=True)
class FusedHit:
    atom_id: AtomId
    s_ret: float
    contributing_routes: dict = field(default_factory=dict, compare=False, hash=False)


def rrf_term(rank: int, rrf_k: float) -> float:
    return 1.0 / (rrf_k + rank)


def fuse_rrf(per_route_hits: Mapping, rrf_k: float = 60.0) -> list[FusedHit]:
    """Sum ``1 / (rrf_k + rank)`` over the routes that returned each atom.

    Routes are accumulated in canonical route order so the floating-point
    sum is reproducible. Output is sorted by score, ties by atom id.
    """
    by_route = {as_route(r): hits for r, hits in per_route_hits.items()}
    scores: dict[AtomId, float] = {}
    contributions: dict[AtomId, dict[str, int]] = {}
    for route in ROUTES:
        seen: set[AtomId] = set()
        for hit in sorted(by_route.get(route, ()), key=lambda h: h.rank):
            if hit.atom_id in seen:
                continue
            seen.add(hit.atom_id)
            scores[hit.atom_id] = scores.get(hit.atom_id, 0.0) + rrf_term(hit.rank, rrf_k)
            contributions.setdefault(hit.atom_id, {})[route.value] = hit.rank
    ordered = sorted(scores, key=lambda a: (-scores[a], a))
    return [FusedHit(a, scores[a], contributions[a]) for a in ordered]
