"""Prompt templates for model-backed providers.

Templates are plain text with ``{{variable}}`` placeholders. The claim
writing template has no placeholders; it refers to ``page.max_claim_units``
as a payload field that the caller fills in the JSON payload instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any

PROMPT_NAMES = ("handle_extraction", "pivot_extraction", "claim_writing", "bundle_selection")

_PLACEHOLDER_RE = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_.]*)\}\}")

DEFAULTS: dict[str, Any] = {
    "handle_usual_max": 3,
    "handle_max": 5,
    "handle_max_word": "five",
    "pivot_usual_max": 3,
    "pivot_max": 5,
    "pivot_max_word": "five",
    "page.max_claim_units": 12,
    "Bundle_max": 6,
}

# Payload fields read by the templates but not substituted into them.
PAYLOAD_FIELDS = {
    "handle_extraction": ("page_text", "spans"),
    "pivot_extraction": ("page_text", "candidates"),
    "claim_writing": ("page.max_claim_units", "ordered_turn_cards", "starter_ids", "boundary_context"),
    "bundle_selection": ("question", "bundles"),
}


@dataclass(frozen=True)
class PromptAsset:
    name: str
    template_text: str
    variables: tuple[str, ...] = field(default=())

    def render(self, **values: Any) -> str:
        merged = {k: DEFAULTS[k] for k in self.variables if k in DEFAULTS}
        merged.update(values)
        missing = [v for v in self.variables if v not in merged]
        if missing:
            raise KeyError(f"prompt {self.name} missing variables {missing}")
        return _PLACEHOLDER_RE.sub(lambda m: str(merged[m.group(1)]), self.template_text)


def placeholders(text: str) -> tuple[str, ...]:
    seen: list[str] = []
    for name in _PLACEHOLDER_RE.findall(text):
        if name not in seen:
            seen.append(name)
    return tuple(seen)


@lru_cache(maxsize=None)
def load_prompt(name: str) -> PromptAsset:
    if name not in PROMPT_NAMES:
        raise KeyError(f"unknown prompt {name!r}")
    text = resources.files("memir.providers.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return PromptAsset(name, text, placeholders(text))


def all_prompts() -> dict[str, PromptAsset]:
    return {name: load_prompt(name) for name in PROMPT_NAMES}
