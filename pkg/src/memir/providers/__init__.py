from memir.providers.base import (
    Answer,
    AnswerComposer,
    AnswerOutcome,
    BundleScorer,
    BundleSelector,
    ClaimProposal,
    ClaimWriter,
    CueExtractor,
    CueProposals,
    Embedder,
    HandleProposal,
    InsufficientEvidence,
    PageCues,
    PivotProposal,
    Providers,
    TimeProposal,
)
from memir.providers.reference import (
    ExtractiveComposer,
    HashingEmbedder,
    OverlapScorer,
    RuleCueExtractor,
    TemplateClaimWriter,
    ThresholdSelector,
    reference_providers,
)

__all__ = [
    "Answer",
    "AnswerComposer",
    "AnswerOutcome",
    "BundleScorer",
    "BundleSelector",
    "ClaimProposal",
    "ClaimWriter",
    "CueExtractor",
    "CueProposals",
    "Embedder",
    "ExtractiveComposer",
    "HandleProposal",
    "HashingEmbedder",
    "InsufficientEvidence",
    "OverlapScorer",
    "PageCues",
    "PivotProposal",
    "Providers",
    "RuleCueExtractor",
    "TemplateClaimWriter",
    "ThresholdSelector",
    "TimeProposal",
    "reference_providers",
]
