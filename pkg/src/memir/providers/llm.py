"""Adapters that drive the prompt templates through a completion callable.

No network client ships here. Callers pass ``complete(prompt, payload_json)
-> response_text`` bound to whatever model they use. Payload construction
(turn cards, starter ids, boundary context) is implementation-defined.
"""

from __future__ import annotations

import json
from typing import Callable, Sequence

from memir.atoms import PageAtom, SpanAtom
from memir.errors import ProviderFailure
from memir.providers.base import ClaimProposal, CueProposals, HandleProposal, PageCues, PivotProposal, TimeProposal
from memir.providers.prompts import load_prompt
from memir.temporal import find_time_expressions, parse_anchor

Complete = Callable[[str, str], str]


def _parse_json(text: str, key: str, provider: str) -> list:
    try:
        data = json.loads(text)
    except (TypeError, json.JSONDecodeError) as exc:
        raise ProviderFailure(provider, f"response is not JSON: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get(key), list):
        raise ProviderFailure(provider, f"response lacks a {key!r} list")
    return data[key]


def _span_payload(spans: Sequence[SpanAtom]) -> list[dict]:
    return [{"id": str(s.id), "speaker": s.speaker, "text": s.verbatim_text} for s in spans]


class PromptedCueExtractor:
    """Handles and pivots from the prompt templates; times stay rule-based."""

    def __init__(self, complete: Complete, **variables):
        self.complete = complete
        self.variables = variables

    def extract(self, page: PageAtom, spans: Sequence[SpanAtom]) -> CueProposals:
        out = CueProposals()
        payload = json.dumps({"page_text": page.raw_text, "spans": _span_payload(spans)}, ensure_ascii=False)
        handle_prompt = load_prompt("handle_extraction").render(**self._vars("handle_extraction"))
        for item in _parse_json(self.complete(handle_prompt, payload), "handles", "cue_extractor"):
            if isinstance(item, dict):
                out.handles.append(HandleProposal(item.get("surface_text"), item.get("support_span_ids")))

        payload = json.dumps({"page_text": page.raw_text, "candidates": _span_payload(spans)}, ensure_ascii=False)
        pivot_prompt = load_prompt("pivot_extraction").render(**self._vars("pivot_extraction"))
        for item in _parse_json(self.complete(pivot_prompt, payload), "pivots", "cue_extractor"):
            if isinstance(item, dict):
                ref = item.get("candidate_ref")
                out.pivots.append(PivotProposal(item.get("referent_label"), item.get("support_text"), [ref]))

        anchor = parse_anchor(page.timestamp_hint)
        for span in spans:
            for t in find_time_expressions(span.verbatim_text, anchor):
                norm = list(t.normalized) if t.normalized else None
                out.times.append(TimeProposal(t.surface, [str(span.id)], norm, t.relative_expression))
        return out

    def _vars(self, name: str) -> dict:
        asset = load_prompt(name)
        return {k: v for k, v in self.variables.items() if k in asset.variables}


class PromptedClaimWriter:
    def __init__(self, complete: Complete):
        self.complete = complete

    def write(self, page: PageAtom, spans: Sequence[SpanAtom], cues: PageCues, budget: int) -> list[ClaimProposal]:
        cards = []
        for s in spans:
            cards.append(
                {
                    "sequence": [{"type": "dialogue", "id": str(s.id), "speaker": s.speaker, "text": s.verbatim_text}],
                    "turn_handles": [h.surface_text for h in cues.handles if s.id in h.support_span_ids],
                    "pivot_hints": [p.referent_label for p in cues.pivots if s.id in p.support_span_ids],
                    "time_cues": [t.surface_text for t in cues.times if s.id in t.support_span_ids],
                }
            )
        payload = {
            "page": {"id": str(page.id), "max_claim_units": budget, "timestamp": page.timestamp_hint},
            "ordered_turn_cards": cards,
            "starter_ids": [str(s.id) for s in spans],
            "boundary_context": [],
        }
        prompt = load_prompt("claim_writing").render()
        units = _parse_json(self.complete(prompt, json.dumps(payload, ensure_ascii=False)), "units", "claim_writer")
        out = []
        for unit in units:
            if not isinstance(unit, dict):
                continue
            support = unit.get("support_span_ids")
            linked = [
                str(c.id)
                for c in cues.all()
                if isinstance(support, list) and any(str(sid) in support for sid in c.support_span_ids)
            ]
            out.append(ClaimProposal(unit.get("unit_text"), support, linked))
        return out


class PromptedSelector:
    def __init__(self, complete: Complete):
        self.complete = complete

    def select(self, query: str, bundles: Sequence[tuple[str, str]], budget: int) -> list[tuple[str, str]]:
        prompt = load_prompt("bundle_selection").render(Bundle_max=budget)
        payload = json.dumps(
            {"question": query, "bundles": [{"bundle_id": b, "text": t} for b, t in bundles]}, ensure_ascii=False
        )
        out = []
        for item in _parse_json(self.complete(prompt, payload), "selected", "selector"):
            if isinstance(item, dict):
                out.append((item.get("bundle_id"), item.get("role")))
        return out
