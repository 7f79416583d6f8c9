"""Pipeline profiles and the flat key/value config file format.

A config file has one ``key = value`` per line; ``#`` starts a comment.
Keys are ``compile.<field>``, ``retrieval.<field>``, ``utilization.<field>``,
plus ``profile`` (the base profile) and ``ablate`` (comma-separated flags).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from memir.compiler import CompileConfig
from memir.errors import ConfigError
from memir.retrieval.routes import RetrievalConfig
from memir.utilization import UtilizationConfig

ABLATIONS = ("no_claims", "no_cues", "no_projection", "no_bundles")


@dataclass(frozen=True)
class PipelineProfile:
    name: str
    compile: CompileConfig = field(default_factory=CompileConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    utilization: UtilizationConfig = field(default_factory=UtilizationConfig)
    ablation_flags: frozenset = frozenset()

    def with_ablations(self, flags: Iterable[str]) -> "PipelineProfile":
        return dataclasses.replace(self, ablation_flags=parse_ablations(flags))


def _profile(name: str, claims: int, pool: int, budget: int) -> PipelineProfile:
    return PipelineProfile(
        name,
        CompileConfig(max_claims_per_page=claims),
        RetrievalConfig(per_route_k=pool),
        UtilizationConfig(pool_m=pool, rerank_keep_k=pool, select_budget_x=budget),
    )


PROFILES = {
    "locomo_default": _profile("locomo_default", 12, 32, 6),
    "beam_default": _profile("beam_default", 18, 72, 10),
}


def get_profile(name: str) -> PipelineProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def parse_ablations(flags: Union[str, Iterable[str], None]) -> frozenset:
    if flags is None:
        return frozenset()
    if isinstance(flags, str):
        flags = [f for f in flags.split(",")]
    out = set()
    for f in flags:
        f = f.strip()
        if not f:
            continue
        if f not in ABLATIONS:
            raise ConfigError(f"unknown ablation {f!r}; choose from {', '.join(ABLATIONS)}")
        out.add(f)
    return frozenset(out)


def _coerce(value: str, annotation, key: str):
    kind = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", str(annotation))
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: {value!r} is not a valid {kind}") from None
    return value


_SECTIONS = {"compile": CompileConfig, "retrieval": RetrievalConfig, "utilization": UtilizationConfig}


def parse_config(text: str, base: Optional[PipelineProfile] = None) -> PipelineProfile:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((lineno, key, value))

    profile = base
    for lineno, key, value in entries:
        if key == "profile":
            profile = get_profile(value)
    if profile is None:
        profile = get_profile("locomo_default")

    overrides: dict[str, dict] = {s: {} for s in _SECTIONS}
    ablations = profile.ablation_flags
    for lineno, key, value in entries:
        if key == "profile":
            continue
        if key == "ablate":
            ablations = parse_ablations(value)
            continue
        section, _, name = key.partition(".")
        cls = _SECTIONS.get(section)
        fields = {f.name: f for f in dataclasses.fields(cls)} if cls else {}
        if name not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        overrides[section][name] = _coerce(value, fields[name].type, key)

    try:
        sections = {s: dataclasses.replace(getattr(profile, s), **o) for s, o in overrides.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    changed = any(overrides.values())
    name = "custom" if changed else profile.name
    return PipelineProfile(name, sections["compile"], sections["retrieval"], sections["utilization"], ablations)


def load_config(path: Union[str, Path], base: Optional[PipelineProfile] = None) -> PipelineProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base)


def profile_record(profile: PipelineProfile) -> dict:
    return {
        "name": profile.name,
        "compile": dataclasses.asdict(profile.compile),
        "retrieval": dataclasses.asdict(profile.retrieval),
        "utilization": dataclasses.asdict(profile.utilization),
        "ablation_flags": sorted(profile.ablation_flags),
    }
