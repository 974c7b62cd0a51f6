"""HTTP review service: the sampled queue, verdict intake, and reports.

A thin façade over the corpus files — every GET is derivable from the store,
and only POST /api/verdicts mutates anything. Read endpoints carry an ETag
(content hash) since the corpus only changes between pipeline runs. Auth is
a single shared bearer token (env REVIEW_TOKEN); unset means open, which is
the analyst-local default.
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import EmptyInputError, LockTimeoutError, NotInSampleError
from .models import VERDICT_VALUES, ValidationVerdict, utcnow
from .reports import REPORT_NAMES, build_report
from .sampling import record_verdict
from .store import CorpusStore

README_TRANSPORT_CAP = 20 * 1024  # bytes of readme shipped per queue item


class VerdictIn(BaseModel):
    repo_id: str
    analyst: str
    verdict: str


def _etag_response(request: Request, body: Any, status_code: int = 200) -> Response:
    payload = json.dumps(body, sort_keys=True, default=str)
    etag = f'"{hashlib.sha256(payload.encode("utf-8")).hexdigest()[:32]}"'
    if request.headers.get("if-none-match") == etag:
        return Response(status_code=304, headers={"ETag": etag})
    return JSONResponse(content=body, status_code=status_code, headers={"ETag": etag})


def create_app(
    corpus_dir: str | Path,
    *,
    k: int = 2,
    split_year: int = 2020,
    top_n: int = 10,
    token: str | None = None,
    static_dir: str | Path | None = None,
    clock: Callable[[], datetime] = utcnow,
    lock_timeout: float = 2.0,
) -> FastAPI:
    store = CorpusStore(corpus_dir, k=k, lock_timeout=lock_timeout)
    token = token if token is not None else os.environ.get("REVIEW_TOKEN")
    app = FastAPI(title="edutriage review", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"code": "malformed_body", "detail": str(exc)})

    @app.middleware("http")
    async def bearer_auth(request: Request, call_next):
        if token and request.url.path.startswith("/api/"):
            if request.headers.get("Authorization") != f"Bearer {token}":
                return JSONResponse(status_code=401, content={"code": "unauthorized"})
        return await call_next(request)

    def _queue_items() -> list[dict[str, Any]] | None:
        sample = store.load_sample()
        if sample is None:
            return None
        records = {r.repo_id: r for r in store.load_records()}
        families = {f.repo_id: f.family for f in store.load_families()}
        runs: dict[str, list] = {}
        for run in store.load_annotations():
            runs.setdefault(run.repo_id, []).append(run)
        latest_verdict: dict[str, ValidationVerdict] = {}
        for verdict in sorted(store.load_verdicts(), key=lambda v: (v.noted_at, v.analyst)):
            latest_verdict[verdict.repo_id] = verdict

        items = []
        for repo_id in sample["repo_ids"]:
            record = records.get(repo_id)
            if record is None:
                continue
            raw = record.readme.encode("utf-8")
            truncated = len(raw) > README_TRANSPORT_CAP
            readme = raw[:README_TRANSPORT_CAP].decode("utf-8", errors="ignore") if truncated else record.readme
            repo_runs = sorted(runs.get(repo_id, []), key=lambda r: r.round)
            verdict = latest_verdict.get(repo_id)
            items.append(
                {
                    "repo_id": repo_id,
                    "full_name": record.full_name,
                    "title": record.title,
                    "description": record.description,
                    "readme": readme,
                    "readme_truncated": truncated,
                    "labels": [r.label.value for r in repo_runs],
                    "family": families.get(repo_id),
                    "verdict": verdict.to_json() if verdict else None,
                }
            )
        return items

    @app.get("/api/queue")
    async def queue(request: Request) -> Response:
        items = _queue_items()
        if items is None:
            return JSONResponse(status_code=404, content={"code": "no_active_sample"})
        return _etag_response(request, {"items": items, "total": len(items)})

    @app.post("/api/verdicts")
    async def post_verdict(body: VerdictIn) -> JSONResponse:
        if body.verdict not in VERDICT_VALUES:
            return JSONResponse(
                status_code=400,
                content={"code": "malformed_body", "detail": f"verdict must be one of {list(VERDICT_VALUES)}"},
            )
        verdict = ValidationVerdict(
            repo_id=body.repo_id, analyst=body.analyst, verdict=body.verdict, noted_at=clock()
        )
        try:
            outcome = record_verdict(store, verdict)
        except NotInSampleError:
            return JSONResponse(status_code=404, content={"code": "not_in_sample"})
        except LockTimeoutError:
            return JSONResponse(status_code=409, content={"code": "store_locked"})
        status = 201 if outcome == "accepted" else 200
        return JSONResponse(status_code=status, content={"status": outcome, **verdict.to_json()})

    @app.get("/api/reports/{name}")
    async def report(
        name: str, request: Request, top_n_q: int | None = Query(None, alias="top_n")
    ) -> Response:
        if name not in REPORT_NAMES:
            return JSONResponse(status_code=404, content={"code": "unknown_report"})
        try:
            body = build_report(store, name, split_year=split_year, top_n=top_n_q or top_n)
        except EmptyInputError as exc:
            return JSONResponse(status_code=404, content={"code": "stage_not_run", "detail": str(exc)})
        return _etag_response(request, body)

    candidates = [
        static_dir,
        os.environ.get("REVIEW_STATIC_DIR"),
        "frontend/dist",
        Path(__file__).resolve().parents[2] / "frontend" / "dist",  # editable checkout
    ]
    for candidate in candidates:
        if candidate and Path(candidate).is_dir():
            app.mount("/", StaticFiles(directory=candidate, html=True), name="console")
            break

    return app
