"""Operations shared by the CLI and the HTTP service.

Each function takes plain paths and options and returns plain data, so
the CLI can call it in-process and the service can wrap it unchanged.
"""

from __future__ import annotations

import json
import os
import threading
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence, Union

from memir.compiler import compile_history
from memir.config import ABLATIONS, PipelineProfile, get_profile, parse_ablations, parse_config
from memir.corpus import load_corpus
from memir.engine import Engine, outcome_record
from memir.evaluation import VARIANTS, dump_records, evaluate, format_table, load_queries
from memir.persistence import load, persist
from memir.providers.base import Providers
from memir.providers.reference import reference_providers

PathLike = Union[str, Path]


def resolve_profile(
    profile: str = "locomo_default", config_text: Optional[str] = None, ablate: Union[str, Sequence[str], None] = None
) -> PipelineProfile:
    base = get_profile(profile)
    if config_text:
        base = parse_config(config_text, base)
    if ablate:
        base = base.with_ablations(parse_ablations(ablate) | base.ablation_flags)
    return base


def default_providers(profile: PipelineProfile) -> Providers:
    return reference_providers(dim=profile.retrieval.dense_dim)


def encode_jsonl(records: Sequence[dict]) -> str:
    return dump_records(records)


def ingest(
    corpus_path: PathLike,
    out_path: PathLike,
    profile: PipelineProfile,
    providers: Optional[Providers] = None,
    report_path: Optional[PathLike] = None,
    workers: int = 1,
) -> dict:
    providers = providers or default_providers(profile)
    history = load_corpus(corpus_path)
    result = compile_history(history, providers, profile.compile, workers=workers)
    out_path = persist(result.store, out_path)
    report_path = Path(report_path) if report_path else out_path.with_name(out_path.name + ".report.jsonl")
    report_path.write_text(encode_jsonl([r.to_record() for r in result.report.rejections]), encoding="utf-8")
    kinds = Counter(a.kind for a in result.store.atoms.values())
    return {
        "store_path": str(out_path),
        "report_path": str(report_path),
        "turns": len(history.turns),
        "atoms": {k: kinds.get(k, 0) for k in ("page", "span", "handle", "time", "pivot", "claim")},
        "views": len(result.store.views),
        "rejections": len(result.report.rejections),
        "failed_pages": sorted(result.report.failed_pages),
        "partial": result.report.partial,
    }


class EngineCache:
    """Engines keyed by store file identity and profile; safe across threads."""

    def __init__(self, size: int = 8):
        self.size = size
        self._lock = threading.Lock()
        self._engines: dict = {}

    def get(self, store_path: PathLike, profile: PipelineProfile, providers: Optional[Providers] = None) -> Engine:
        path = Path(store_path).resolve()
        stat = os.stat(path)
        key = (str(path), stat.st_mtime_ns, stat.st_size, profile)
        if providers is not None:
            return Engine(load(path), providers, profile)
        with self._lock:
            engine = self._engines.get(key)
        if engine is None:
            engine = Engine(load(path), default_providers(profile), profile)
            with self._lock:
                if len(self._engines) >= self.size:
                    self._engines.pop(next(iter(self._engines)))
                self._engines[key] = engine
        return engine


_cache = EngineCache()


def query(
    store_path: PathLike,
    question: str,
    profile: PipelineProfile,
    providers: Optional[Providers] = None,
    trace: bool = False,
    cache: Optional[EngineCache] = None,
) -> dict:
    engine = (cache or _cache).get(store_path, profile, providers)
    result = engine.query(question)
    out = {
        "query": question,
        "rendered": result.fact_interface.render(),
        "sufficiency": result.fact_interface.sufficiency_flag,
        "outcome": outcome_record(result.outcome),
    }
    if trace:
        out["trace"] = result.trace
    return out


def run_eval(
    store_path: PathLike,
    queries_path: PathLike,
    profile: PipelineProfile,
    providers: Optional[Providers] = None,
    variants: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> dict:
    store = load(store_path)
    queries = load_queries(queries_path)
    report = evaluate(store, providers or default_providers(profile), profile.with_ablations(()), queries, variants or VARIANTS, workers)
    return {"table": format_table(report), "records": report.records}


def eval_variants(ablate: Union[str, Sequence[str], None]) -> tuple[str, ...]:
    flags = parse_ablations(ablate)
    if not flags:
        return VARIANTS
    return ("full",) + tuple(a for a in ABLATIONS if a in flags)


def render_outcome(outcome: dict) -> str:
    if outcome["kind"] == "answer":
        return f"ANSWER: {outcome['text']}\n"
    if outcome["kind"] == "insufficient_evidence":
        return f"INSUFFICIENT EVIDENCE: {outcome['reason']}\n"
    return "NO ANSWER COMPOSED\n"


def trace_text(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)
