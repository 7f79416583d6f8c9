"""HTTP service over the shared operations in :mod:`memir.api`.

Stores are immutable once compiled, so engines are cached and queries
run concurrently against them.
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from memir import api
from memir.errors import MemIRError, ProviderFailure
from memir.service.schemas import (
    EvalRequest,
    EvalResponse,
    IngestRequest,
    IngestResponse,
    QueryRequest,
    QueryResponse,
)


def _profile(req):
    return api.resolve_profile(req.profile, req.config_text, req.ablate)


def create_app() -> FastAPI:
    app = FastAPI(title="memir", version="0.1.0")
    cache = api.EngineCache()

    @app.exception_handler(ProviderFailure)
    async def provider_failure(request: Request, exc: ProviderFailure):
        return JSONResponse(status_code=502, content={"error": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(MemIRError)
    async def input_error(request: Request, exc: MemIRError):
        return JSONResponse(status_code=400, content={"error": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(OSError)
    async def io_error(request: Request, exc: OSError):
        return JSONResponse(status_code=400, content={"error": type(exc).__name__, "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(req: IngestRequest):
        return api.ingest(req.corpus_path, req.out_path, _profile(req), report_path=req.report_path)

    @app.post("/query", response_model=QueryResponse)
    def query(req: QueryRequest):
        return api.query(req.store_path, req.question, _profile(req), trace=req.trace, cache=cache)

    @app.post("/trace", response_model=QueryResponse)
    def trace(req: QueryRequest):
        return api.query(req.store_path, req.question, _profile(req), trace=True, cache=cache)

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest):
        profile = api.resolve_profile(req.profile, req.config_text)
        return api.run_eval(req.store_path, req.queries_path, profile, variants=api.eval_variants(req.ablate))

    return app


app = create_app()
