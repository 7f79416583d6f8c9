from typing import Any, Optional

from pydantic import BaseModel, Field


class ProfileOptions(BaseModel):
    profile: str = "locomo_default"
    config_text: Optional[str] = Field(default=None, description="flat key = value config file contents")
    ablate: Optional[str] = Field(default=None, description="comma-separated ablation flags")


class IngestRequest(ProfileOptions):
    corpus_path: str
    out_path: str
    report_path: Optional[str] = None


class IngestResponse(BaseModel):
    store_path: str
    report_path: str
    turns: int
    atoms: dict[str, int]
    views: int
    rejections: int
    failed_pages: list[str]
    partial: bool


class QueryRequest(ProfileOptions):
    store_path: str
    question: str
    trace: bool = False


class Outcome(BaseModel):
    record: str = "outcome"
    kind: str
    text: Optional[str] = None
    cited_records: Optional[list[int]] = None
    reason: Optional[str] = None


class QueryResponse(BaseModel):
    query: str
    rendered: str
    sufficiency: bool
    outcome: Outcome
    trace: Optional[list[dict[str, Any]]] = None


class EvalRequest(ProfileOptions):
    store_path: str
    queries_path: str


class EvalResponse(BaseModel):
    table: str
    records: list[dict[str, Any]]


class ErrorResponse(BaseModel):
    error: str
    message: str
