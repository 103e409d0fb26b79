"""JSON-over-HTTP facade for the search engine (schemas in API.md).

One index per process. The block directory, k-gram tables, vocabulary and
embeddings are loaded at startup; run and position data stay on disk and are
block-read on demand.
"""

from __future__ import annotations

import logging
import sys
import time
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

log = logging.getLogger("softgrep.server")

from .contamination import audit_documents
from .render import result_payload
from .search import DEFAULT_K, SearchConfig, Searcher, SearchError
from .similarity import DEFAULT_EDIT_BUDGET, DEFAULT_FLOOR, EXTENDED_FLOOR


class AuditBody(BaseModel):
    documents: list[str]
    overlap: bool = False
    budget: int = DEFAULT_EDIT_BUDGET


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


def create_app(index_dir, embeddings_path=None, norms_path=None,
               gamma_prime=None, frontend_dir=None,
               cache_blocks=1024) -> FastAPI:
    from .cli import make_searcher

    app = FastAPI(title="softgrep", docs_url=None, redoc_url=None)
    state: dict = {"searcher": None}
    try:
        searcher = make_searcher(index_dir, embeddings_path, norms_path,
                                 gamma_prime, cache_blocks=cache_blocks)
        state["searcher"] = searcher
        disk = sum(
            f.stat().st_size for f in Path(index_dir).iterdir() if f.is_file()
        )
        print(f"index loaded: {searcher.index.n} tokens, "
              f"directory+tables RAM {searcher.index.ram_bytes() >> 10} KiB, "
              f"disk {disk >> 20} MiB", file=sys.stderr)
    except Exception as exc:  # surface as 503 rather than failing requests later
        print(f"index failed to load: {exc}", file=sys.stderr)

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, (SearchError, ValueError)):
            return _error(400, "bad_request", str(exc))
        return _error(500, "internal", str(exc))

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        elapsed = (time.perf_counter() - t0) * 1e3
        lookups = getattr(request.state, "lookups", "-")
        log.info("%s %s -> %d in %.1f ms lookups=%s", request.method,
                 request.url.path, response.status_code, elapsed, lookups)
        return response

    def ready() -> Searcher | None:
        return state["searcher"]

    @app.get("/api/search")
    def api_search(
        request: Request,
        q: str,
        k: int = Query(default=DEFAULT_K, ge=1),
        floor: float = Query(default=DEFAULT_FLOOR, gt=0, le=1),
        extended: bool = False,
        budget: int = Query(default=DEFAULT_EDIT_BUDGET, ge=0),
    ):
        searcher = ready()
        if searcher is None:
            return _error(503, "not_ready", "index not loaded")
        words, ids = searcher.index.tokenize(q)
        if not words:
            return _error(400, "bad_request", "empty query")
        config = SearchConfig(
            k=k, floor=EXTENDED_FLOOR if extended else floor, edit_budget=budget
        )
        try:
            results, stats = searcher.search(ids, config)
        except SearchError as exc:
            return _error(400, "bad_request", str(exc))
        request.state.lookups = stats.total_lookups
        vocab_words = searcher.index.vocabulary.words
        return {
            "query": " ".join(words),
            "results": [result_payload(sp, words, vocab_words) for sp in results],
            "stats": {
                "elapsed_ms": round(stats.elapsed_ms, 3),
                "total_lookups": stats.total_lookups,
                "final_alpha": stats.final_alpha,
                "kgram_skips": stats.kgram_skips,
                "lastbits_scans": stats.lastbits_scans,
            },
            "truncated": len(results) >= config.k,
        }

    @app.get("/api/count")
    def api_count(q: str):
        searcher = ready()
        if searcher is None:
            return _error(503, "not_ready", "index not loaded")
        words, ids = searcher.index.tokenize(q)
        if not words:
            return _error(400, "bad_request", "empty pattern")
        if any(i is None for i in ids):
            return {"pattern": " ".join(words), "count": 0}
        try:
            rng = searcher.index.find_range(ids)
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        return {"pattern": " ".join(words), "count": rng.count}

    @app.get("/api/occurrences")
    def api_occurrences(
        pattern: str,
        limit: int = Query(default=10, ge=1, le=1000),
        context: int = Query(default=8, ge=0, le=64),
    ):
        searcher = ready()
        if searcher is None:
            return _error(503, "not_ready", "index not loaded")
        words, ids = searcher.index.tokenize(pattern)
        if not words:
            return _error(400, "bad_request", "empty pattern")
        if any(i is None for i in ids):
            return {"pattern": " ".join(words), "occurrences": []}
        try:
            hits = searcher.index.occurrences(ids, limit=limit, context=context)
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        return {
            "pattern": " ".join(words),
            "occurrences": [
                {"position": pos, "left": left, "match": mid, "right": right}
                for pos, left, mid, right in hits
            ],
        }

    @app.post("/api/audit")
    def api_audit(body: AuditBody):
        searcher = ready()
        if searcher is None:
            return _error(503, "not_ready", "index not loaded")
        summary = audit_documents(body.documents, searcher,
                                  edit_budget=body.budget, overlap=body.overlap)
        return {
            "summary": {
                "total": summary.total,
                "skipped": summary.skipped,
                "dirty": summary.dirty,
                "dirty_exact": summary.dirty_exact,
                "dirty_soft_only": summary.dirty_soft_only,
            },
            "results": [
                {
                    "doc_id": r.doc_id,
                    "eta": round(r.eta, 4),
                    "dirty": r.dirty,
                    "dirty_exact": r.dirty_exact,
                    "chunks": [
                        {
                            "text": " ".join(c.tokens),
                            "matched": c.matched,
                            "best_similarity": round(c.best_similarity, 4),
                            "best_pattern": c.best_pattern,
                        }
                        for c in r.chunks
                    ],
                }
                for r in summary.results
            ],
        }

    @app.get("/api/meta")
    def api_meta():
        searcher = ready()
        if searcher is None:
            return _error(503, "not_ready", "index not loaded")
        meta = dict(searcher.index.meta)
        meta["ram_bytes"] = searcher.index.ram_bytes()
        meta["has_embeddings"] = searcher.embeddings is not None
        return meta

    static = frontend_dir or Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if Path(static).is_dir():
        app.mount("/", StaticFiles(directory=str(static), html=True), name="ui")
    return app
