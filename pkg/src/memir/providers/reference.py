"""Deterministic rule-based providers.

These keep the whole pipeline runnable offline and reproducible. They are
deliberately simple and make no claim to the quality of model-backed
providers.
"""

from __future__ import annotations

import hashlib
import re
from typing import Optional, Sequence

import numpy as np

from memir.atoms import PageAtom, SpanAtom
from memir.providers.base import (
    Answer,
    AnswerOutcome,
    ClaimProposal,
    CueProposals,
    HandleProposal,
    InsufficientEvidence,
    PageCues,
    PivotProposal,
    Providers,
    TimeProposal,
)
from memir.temporal import MONTHS, WEEKDAYS, find_time_expressions, parse_anchor
from memir.text import content_words, event_verbs, function_words, tokenize

FILLER_WORDS = frozenset(
    {
        "haha", "hahaha", "lol", "nice", "wow", "cool", "great", "thanks", "thank",
        "ok", "okay", "yeah", "yes", "no", "hi", "hey", "hello", "bye", "sure",
        "awesome", "omg", "oh", "ah", "hmm", "congrats", "congratulations", "amazing",
        "good", "glad", "totally", "absolutely", "definitely", "really", "yep", "nope",
        "sounds", "wonderful", "fantastic", "lovely", "see", "soon", "take", "care", "talk",
        "later", "not", "bad", "fun", "well", "all", "right", "love", "that", "hear",
    }
)

# Capitalized words that never start or form a handle on their own.
_NON_HANDLE = frozenset(FILLER_WORDS) | frozenset(MONTHS) | frozenset(WEEKDAYS) | {"i", "i'm", "i've", "i'll", "i'd"}

_WORD_RE = re.compile(r"[A-Za-z][A-Za-z0-9'’\-]*")
_DETERMINERS = frozenset({"a", "an", "the", "her", "his", "my", "our", "their", "your", "its", "this", "that", "some"})
_LEAD_PREPOSITIONS = frozenset({"to", "into", "at", "in", "for", "on"})
MAX_LABEL_WORDS = 4

_PRONOUN_SUBJECTS = {
    "i": "{speaker}",
    "i'm": "{speaker} is",
    "i’m": "{speaker} is",
    "i've": "{speaker} has",
    "i’ve": "{speaker} has",
    "i'll": "{speaker} will",
    "i’ll": "{speaker} will",
    "i'd": "{speaker} would",
    "i’d": "{speaker} would",
    "my": "{speaker}'s",
}


def is_content_sentence(text: str) -> bool:
    fw = function_words()
    return any(t not in fw and t not in FILLER_WORDS for t in tokenize(text))


def _overlaps(start: int, end: int, ranges) -> bool:
    return any(start < e and s < end for s, e in ranges)


def find_handles(text: str, blocked: Sequence[tuple[int, int]] = ()) -> list[str]:
    """Maximal runs of capitalized words, minus sentence-initial singletons."""
    fw = function_words()
    words = [m for m in _WORD_RE.finditer(text) if not _overlaps(m.start(), m.end(), blocked)]
    runs: list[list[re.Match]] = []
    for m in words:
        if not m.group(0)[0].isupper():
            runs.append([])
            continue
        prev = runs[-1][-1] if runs and runs[-1] else None
        if prev is not None and text[prev.end():m.start()] == " ":
            runs[-1].append(m)
        else:
            runs.append([m])

    first_word_start = words[0].start() if words else -1
    handles = []
    for run in runs:
        while run and (run[0].group(0).lower() in fw or run[0].group(0).lower() in _NON_HANDLE):
            run = run[1:]
        while run and run[-1].group(0).lower() in _NON_HANDLE:
            run = run[:-1]
        if not run:
            continue
        if len(run) == 1 and run[0].start() == first_word_start:
            continue
        surface = text[run[0].start():run[-1].end()]
        if len(surface) >= 2 and surface not in handles:
            handles.append(surface)
    return handles


def find_pivot(text: str, blocked: Sequence[tuple[int, int]] = ()) -> Optional[tuple[str, str]]:
    """(referent_label, support_text) for the first event verb with an object."""
    fw = function_words()
    verbs = event_verbs()
    words = list(_WORD_RE.finditer(text))
    for i, m in enumerate(words):
        if m.group(0).lower() not in verbs:
            continue
        label: list[re.Match] = []
        j = i + 1
        skipped_prep = False
        prev_end = m.end()
        while j < len(words) and len(label) < MAX_LABEL_WORDS:
            w = words[j]
            gap = text[prev_end:w.start()]
            if gap.strip():
                break
            low = w.group(0).lower()
            if _overlaps(w.start(), w.end(), blocked):
                break
            if not label and low in _DETERMINERS:
                pass
            elif not label and not skipped_prep and low in _LEAD_PREPOSITIONS:
                skipped_prep = True
            elif low in fw:
                break
            else:
                label.append(w)
            prev_end = w.end()
            j += 1
        if label:
            return text[label[0].start():label[-1].end()], text[m.start():label[-1].end()]
    return None


class RuleCueExtractor:
    """Times from date/weekday/relative patterns, handles from capitalization,
    pivots from a shipped event-verb list."""

    def extract(self, page: PageAtom, spans: Sequence[SpanAtom]) -> CueProposals:
        anchor = parse_anchor(page.timestamp_hint)
        out = CueProposals()
        for span in spans:
            text = span.verbatim_text
            sid = [str(span.id)]
            times = find_time_expressions(text, anchor)
            for t in times:
                out.times.append(
                    TimeProposal(t.surface, list(sid), list(t.normalized) if t.normalized else None, t.relative_expression)
                )
            blocked = [(t.start, t.end) for t in times]
            for surface in find_handles(text, blocked):
                out.handles.append(HandleProposal(surface, list(sid)))
            pivot = find_pivot(text, blocked)
            if pivot is not None:
                out.pivots.append(PivotProposal(pivot[0], pivot[1], list(sid)))
        return out


_TWO_WORD_SUBJECTS = {"i am": "{speaker} is", "i have": "{speaker} has"}


def resolve_speaker(sentence: str, speaker: str) -> Optional[str]:
    """Rewrite a sentence-initial first-person pronoun to the speaker's name."""
    m = re.match(r"(I)\s+(am|have)\b", sentence)
    if m is not None:
        key = f"i {m.group(2)}"
        return _TWO_WORD_SUBJECTS[key].format(speaker=speaker) + sentence[m.end():]
    m = re.match(r"([A-Za-z'’]+)\b", sentence)
    if m is None:
        return None
    template = _PRONOUN_SUBJECTS.get(m.group(1).lower())
    if template is None:
        return None
    return template.format(speaker=speaker) + sentence[m.end():]


def template_claim_text(span: SpanAtom, page: PageAtom) -> str:
    resolved = resolve_speaker(span.verbatim_text, span.speaker)
    body = resolved if resolved is not None else f"{span.speaker} stated: {span.verbatim_text}"
    if page.timestamp_hint:
        return f"On {page.timestamp_hint[:10]}, {body}"
    return body


class TemplateClaimWriter:
    """One claim per content sentence, pivot-bearing sentences first.

    Selected claims are returned in page order; each cites only its own
    sentence span and links the cues grounded in that span.
    """

    def write(self, page: PageAtom, spans: Sequence[SpanAtom], cues: PageCues, budget: int) -> list[ClaimProposal]:
        pivot_spans = {sid for p in cues.pivots for sid in p.support_span_ids}
        content = [s for s in spans if is_content_sentence(s.verbatim_text)]
        ranked = [s for s in content if s.id in pivot_spans] + [s for s in content if s.id not in pivot_spans]
        chosen = sorted(ranked[:budget], key=lambda s: s.id)
        out = []
        for span in chosen:
            linked = [str(c.id) for c in cues.all() if span.id in c.support_span_ids]
            out.append(ClaimProposal(template_claim_text(span, page), [str(span.id)], linked))
        return out


def _stable_hash(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


class HashingEmbedder:
    """Signed feature hashing of lowercase tokens, L2-normalized."""

    def __init__(self, dim: int = 1024):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    def bucket(self, token: str) -> tuple[int, float]:
        h = _stable_hash(token)
        return h % self.dim, (1.0 if (h >> 63) & 1 else -1.0)

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            idx, sign = self.bucket(token)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def overlap_score(query: str, text: str) -> float:
    q = content_words(query)
    if not q:
        return 0.0
    return len(q & content_words(text)) / len(q)


class OverlapScorer:
    """Fraction of the query's content words present in the serialized bundle."""

    def score(self, query: str, serialized: str) -> float:
        return overlap_score(query, serialized)


class ThresholdSelector:
    """Greedy top-X by overlap score; ``direct`` at or above the threshold.

    The 0.5 threshold is an arbitrary deterministic rule, not a tuned value.
    Bundles with zero overlap are never selected.
    """

    def __init__(self, threshold: float = 0.5):
        self.threshold = threshold

    def select(self, query: str, bundles: Sequence[tuple[str, str]], budget: int) -> list[tuple[str, str]]:
        scored = [(overlap_score(query, text), i, bid) for i, (bid, text) in enumerate(bundles)]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [
            (bid, "direct" if s >= self.threshold else "support")
            for s, _, bid in scored[:budget]
            if s > 0
        ]


_FACT_RE = re.compile(r"^FACT\[(\d+)\] \((direct|support)\) (.*)$")
_WHEN_RE = re.compile(r"^\s*(when\b|what (time|date|day|year|month)\b)", re.I)


class ExtractiveComposer:
    """Answers with the first direct fact of a rendered fact interface.

    For when-questions the fact's first temporal cue is appended. Without a
    direct fact the outcome is insufficient evidence.
    """

    def compose(self, query: str, rendered: str) -> AnswerOutcome:
        lines = rendered.splitlines()
        for i, line in enumerate(lines):
            m = _FACT_RE.match(line)
            if m is None or m.group(2) != "direct":
                continue
            text = m.group(3)
            if _WHEN_RE.match(query):
                cues = _time_cues(lines[i + 1] if i + 1 < len(lines) else "")
                if cues:
                    text = f"{text} (time: {cues[0]})"
            return Answer(text, (int(m.group(1)),))
        return InsufficientEvidence("no direct fact record")


def _time_cues(line: str) -> list[str]:
    if not line.startswith("TIME: "):
        return []
    body = line[len("TIME: "):]
    if body == "none":
        return []
    return body.split("; ")


def reference_providers(dim: int = 1024, timeout: Optional[float] = None) -> Providers:
    return Providers(
        cue_extractor=RuleCueExtractor(),
        claim_writer=TemplateClaimWriter(),
        embedder=HashingEmbedder(dim),
        scorer=OverlapScorer(),
        selector=ThresholdSelector(),
        composer=ExtractiveComposer(),
        timeout=timeout,
    )


class NullCueExtractor:
    """Extracts nothing; used by the no-cues ablation."""

    def extract(self, page: PageAtom, spans: Sequence[SpanAtom]) -> CueProposals:
        return CueProposals()
