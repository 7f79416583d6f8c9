"""Provider contracts.

Providers stand in for the model-backed stages (cue extraction, claim
writing, embedding, reranking, selection, answering). Their output is
treated as untrusted: the calling stage validates everything before it
is stored or used.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence, Union, runtime_checkable

import numpy as np

from memir.atoms import HandleAtom, PageAtom, PivotAtom, SpanAtom, TimeAtom
from memir.errors import ProviderFailure


@dataclass
class HandleProposal:
    surface_text: Any
    support_span_ids: Any


@dataclass
class TimeProposal:
    surface_text: Any
    support_span_ids: Any
    normalized: Any = None
    relative_expression: Any = None


@dataclass
class PivotProposal:
    referent_label: Any
    support_text: Any
    support_span_ids: Any


@dataclass
class CueProposals:
    handles: list = field(default_factory=list)
    times: list = field(default_factory=list)
    pivots: list = field(default_factory=list)


@dataclass
class ClaimProposal:
    claim_text: Any
    support_span_ids: Any
    linked_cue_ids: Any = ()


@dataclass(frozen=True)
class PageCues:
    """Validated cue atoms of one page, as handed to a claim writer."""

    handles: tuple[HandleAtom, ...] = ()
    times: tuple[TimeAtom, ...] = ()
    pivots: tuple[PivotAtom, ...] = ()

    def all(self) -> tuple:
        return self.handles + self.times + self.pivots


@dataclass(frozen=True)
class Answer:
    text: str
    cited_records: tuple[int, ...] = ()


@dataclass(frozen=True)
class InsufficientEvidence:
    reason: str = "insufficient evidence"


AnswerOutcome = Union[Answer, InsufficientEvidence]


@runtime_checkable
class CueExtractor(Protocol):
    def extract(self, page: PageAtom, spans: Sequence[SpanAtom]) -> CueProposals: ...


@runtime_checkable
class ClaimWriter(Protocol):
    def write(
        self, page: PageAtom, spans: Sequence[SpanAtom], cues: PageCues, budget: int
    ) -> list[ClaimProposal]: ...


@runtime_checkable
class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


@runtime_checkable
class BundleScorer(Protocol):
    def score(self, query: str, serialized: str) -> float: ...


@runtime_checkable
class BundleSelector(Protocol):
    def select(
        self, query: str, bundles: Sequence[tuple[str, str]], budget: int
    ) -> list[tuple[str, str]]: ...


@runtime_checkable
class AnswerComposer(Protocol):
    def compose(self, query: str, rendered: str) -> AnswerOutcome: ...


@dataclass
class Providers:
    cue_extractor: CueExtractor
    claim_writer: ClaimWriter
    embedder: Embedder
    scorer: BundleScorer
    selector: BundleSelector
    composer: AnswerComposer
    timeout: Optional[float] = None


def invoke(provider: str, fn, *args, timeout: Optional[float] = None):
    """Call a provider, mapping any exception or timeout to ProviderFailure."""
    if timeout is None:
        try:
            return fn(*args)
        except ProviderFailure:
            raise
        except Exception as exc:  # provider code is untrusted
            raise ProviderFailure(provider, f"{type(exc).__name__}: {exc}") from exc

    pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
    future = pool.submit(fn, *args)
    try:
        return future.result(timeout=timeout)
    except concurrent.futures.TimeoutError:
        raise ProviderFailure(provider, f"timed out after {timeout}s") from None
    except ProviderFailure:
        raise
    except Exception as exc:
        raise ProviderFailure(provider, f"{type(exc).__name__}: {exc}") from exc
    finally:
        pool.shutdown(wait=False)
