"""HTTP API over the query service."""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..cypher import PageRequest
from ..cypher.errors import CypherSyntaxError, ExecutionError, PageError
from .pipeline import QueryService, ServiceError, new_correlation_id

logger = logging.getLogger(__name__)


class QueryBody(BaseModel):
    question: str
    session_id: str | None = None
    page: int = 1
    page_size: int | None = None


class CypherBody(BaseModel):
    query: str
    params: dict | None = None
    page: int = 1
    page_size: int | None = None


def create_app(service: QueryService) -> FastAPI:
    app = FastAPI(title="askg", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        cid = new_correlation_id()
        logger.exception("unhandled error [%s]", cid)
        return JSONResponse(status_code=500, content={"error": "internal error", "correlation_id": cid})

    def _page(number: int, size: int | None) -> PageRequest:
        return PageRequest(number=number, size=size)

    @app.post("/api/query")
    async def api_query(body: QueryBody):
        try:
            page = None
            if body.page != 1 or body.page_size is not None:
                page = _page(body.page, body.page_size)
            return service.ask(body.question, session_id=body.session_id, page=page)
        except ServiceError as exc:
            return JSONResponse(
                status_code=exc.status, content={"error": str(exc), **exc.detail}
            )
        except PageError as exc:
            return JSONResponse(status_code=413, content={"error": str(exc)})

    @app.post("/api/cypher")
    async def api_cypher(body: CypherBody):
        try:
            page = None
            if body.page != 1 or body.page_size is not None:
                page = _page(body.page, body.page_size)
            return service.run_cypher(body.query, params=body.params, page=page)
        except CypherSyntaxError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except PageError as exc:
            return JSONResponse(status_code=413, content={"error": str(exc)})
        except ExecutionError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/schema")
    async def api_schema():
        return service.schema_info()

    @app.get("/api/stats")
    async def api_stats():
        return service.stats()

    @app.get("/api/health")
    async def api_health():
        return service.health()

    return app
