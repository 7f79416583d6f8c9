"""Desk-scale evaluation: claim-level recall with and without ablations."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from memir.atoms import AtomId, ClaimAtom, SpanAtom
from memir.config import ABLATIONS, PipelineProfile
from memir.engine import Engine, QueryResult
from memir.errors import ParseError, UnresolvedGoldId
from memir.providers.base import Providers
from memir.store import MemoryStore

VARIANTS = ("full",) + ABLATIONS


@dataclass(frozen=True)
class EvalQuery:
    id: str
    question: str
    gold_claim_ids: tuple[AtomId, ...] = ()
    category: str = ""


def read_queries(text: str) -> list[EvalQuery]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            gold = tuple(AtomId.parse(g) for g in rec.get("gold_claim_ids", []))
            out.append(EvalQuery(str(rec["id"]), rec["question"], gold, str(rec.get("category", ""))))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(lineno, f"bad query record: {exc}") from None
        if not isinstance(out[-1].question, str):
            raise ParseError(lineno, "question must be text")
    return out


def load_queries(path: Union[str, Path]) -> list[EvalQuery]:
    return read_queries(Path(path).read_text(encoding="utf-8"))


def check_gold(store: MemoryStore, queries: Sequence[EvalQuery]) -> None:
    for q in queries:
        for g in q.gold_claim_ids:
            if not isinstance(store.atoms.get(g), ClaimAtom):
                raise UnresolvedGoldId(f"query {q.id}: gold id {g} is not a claim of the store")


def credits(store: MemoryStore, head: AtomId, gold: AtomId) -> bool:
    """A bundle head answers for a gold claim if it is that claim.

    Span-headed bundles (the no_claims and no_projection ablations) count
    when the span is one of the gold claim's support spans.
    """
    if head == gold:
        return True
    atom = store.atoms.get(head)
    return isinstance(atom, SpanAtom) and head in store.get(gold).support_span_ids


def _recall(store: MemoryStore, heads: Sequence[AtomId], gold: Sequence[AtomId]) -> Optional[float]:
    if not gold:
        return None
    hit = sum(1 for g in gold if any(credits(store, h, g) for h in heads))
    return hit / len(gold)


@dataclass
class MetricsRow:
    variant: str
    queries: int
    labeled: int
    recall_at_bundles: Optional[float]
    recall_at_selection: Optional[float]
    mean_fact_count: Optional[float]

    def to_record(self) -> dict:
        return {
            "record": "summary",
            "variant": self.variant,
            "queries": self.queries,
            "labeled": self.labeled,
            "recall_at_bundles": self.recall_at_bundles,
            "recall_at_selection": self.recall_at_selection,
            "mean_fact_count": self.mean_fact_count,
        }


@dataclass
class EvalReport:
    rows: list[MetricsRow] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)

    def row(self, variant: str) -> MetricsRow:
        return next(r for r in self.rows if r.variant == variant)


def _mean(values: list[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def evaluate(
    store: MemoryStore,
    providers: Providers,
    profile: PipelineProfile,
    queries: Sequence[EvalQuery],
    variants: Sequence[str] = VARIANTS,
    workers: int = 1,
) -> EvalReport:
    check_gold(store, queries)
    report = EvalReport()
    queries = sorted(queries, key=lambda q: q.id)
    for variant in variants:
        flags = [] if variant == "full" else [variant]
        engine = Engine(store, providers, profile.with_ablations(flags))

        def run(q: EvalQuery) -> QueryResult:
            return engine.query(q.question, compose=False)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run, queries))
        else:
            results = [run(q) for q in queries]

        at_bundles, at_selection, sizes = [], [], []
        for q, res in zip(queries, results):
            rb = _recall(store, res.offered_heads, q.gold_claim_ids)
            rs = _recall(store, res.selected_heads, q.gold_claim_ids)
            if rb is not None:
                at_bundles.append(rb)
                at_selection.append(rs)
            sizes.append(len(res.fact_interface.records))
            report.records.append(
                {
                    "record": "query",
                    "variant": variant,
                    "query_id": q.id,
                    "category": q.category,
                    "gold": [str(g) for g in q.gold_claim_ids],
                    "offered": [str(h) for h in res.offered_heads],
                    "selected": [str(h) for h in res.selected_heads],
                    "recall_at_bundles": rb,
                    "recall_at_selection": rs,
                    "fact_count": sizes[-1],
                    "sufficient": res.fact_interface.sufficiency_flag,
                }
            )
        row = MetricsRow(variant, len(queries), len(at_bundles), _mean(at_bundles), _mean(at_selection), _mean(sizes))
        report.rows.append(row)
        report.records.append(row.to_record())
    return report


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


COLUMNS = ("variant", "queries", "labeled", "recall@bundles", "recall@selection", "mean|F_q|")


def format_table(report: EvalReport) -> str:
    rows = [COLUMNS] + [
        (
            r.variant,
            str(r.queries),
            str(r.labeled),
            _fmt(r.recall_at_bundles),
            _fmt(r.recall_at_selection),
            _fmt(r.mean_fact_count),
        )
        for r in report.rows
        if r.queries
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(row, widths))) for row in rows]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def dump_records(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)
