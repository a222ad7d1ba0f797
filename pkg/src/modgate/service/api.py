"""HTTP JSON API over the moderation gate.

Endpoints (all under /v1, optional static bearer token):
  POST /v1/score                  {"message": {...}} -> verdict + flag
  GET  /v1/flags                  ?status=&page=&page_size=
  POST /v1/flags/{id}/verdict     {"label": ..., "moderator_id": ...}
  GET  /v1/stats/personas         persona stats artifact
  GET  /v1/reports/eval           loop evaluation reports artifact
  GET  /v1/stats/service          queue + retraining counters
  POST /v1/corpus/export          {"since": ISO-8601 | null} -> corpus JSONL
Errors are {"code": ..., "message": ...}.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..domain import Message
from ..errors import ModgateError
from .gate import ModerationGate
from .store import FlagStore, export_retraining_corpus

_STATUS_BY_CODE = {
    "unknown_flag": 404,
    "already_resolved": 409,
    "unknown_label": 400,
    "empty_input": 400,
}


class ScoreRequest(BaseModel):
    message: dict


class VerdictRequest(BaseModel):
    label: str
    moderator_id: str


class ExportRequest(BaseModel):
    since: str | None = None


def create_app(
    gate: ModerationGate,
    store: FlagStore,
    personas_path: str | Path | None = None,
    reports_path: str | Path | None = None,
    token: str | None = None,
) -> FastAPI:
    app = FastAPI(title="modgate", docs_url=None, redoc_url=None)

    def authorized(authorization: str | None = Header(default=None)) -> None:
        if token and authorization != f"Bearer {token}":
            raise _Unauthorized()

    class _Unauthorized(Exception):
        pass

    @app.exception_handler(_Unauthorized)
    async def _unauthorized(_request: Request, _exc: _Unauthorized):
        return JSONResponse(
            status_code=401,
            content={"code": "unauthorized", "message": "missing or bad bearer token"},
        )

    @app.exception_handler(ModgateError)
    async def _domain_error(_request: Request, exc: ModgateError):
        return JSONResponse(
            status_code=_STATUS_BY_CODE.get(exc.code, 400),
            content={"code": exc.code, "message": exc.message},
        )

    @app.post("/v1/score", dependencies=[Depends(authorized)])
    def score(req: ScoreRequest):
        try:
            message = Message.from_dict(req.message)
        except (KeyError, ValueError, TypeError) as exc:
            return JSONResponse(
                status_code=400,
                content={"code": "bad_message", "message": f"malformed message: {exc}"},
            )
        verdict = gate.score_message(message)
        return {
            "verdict": "flag" if verdict.flagged else "pass",
            "label": verdict.label,
            "scores": dict(verdict.scores),
            "reason": verdict.reason,
            "flag": verdict.flag.to_dict() if verdict.flag else None,
        }

    @app.get("/v1/flags", dependencies=[Depends(authorized)])
    def list_flags(status: str | None = None, page: int = 1, page_size: int = 50):
        records, total = store.list_flags(status=status, page=page, page_size=page_size)
        return {
            "flags": [r.to_dict() for r in records],
            "total": total,
            "page": page,
            "page_size": page_size,
        }

    @app.post("/v1/flags/{flag_id}/verdict", dependencies=[Depends(authorized)])
    def resolve(flag_id: str, req: VerdictRequest):
        record = store.resolve(flag_id, req.label, req.moderator_id)
        return record.to_dict()

    @app.get("/v1/stats/personas", dependencies=[Depends(authorized)])
    def personas():
        return _read_artifact(personas_path, {"available": False})

    @app.get("/v1/reports/eval", dependencies=[Depends(authorized)])
    def eval_reports():
        payload = _read_artifact(reports_path, {"reports": []})
        if isinstance(payload, list):
            payload = {"reports": payload}
        payload.setdefault("reports", [])
        return payload

    @app.get("/v1/stats/service", dependencies=[Depends(authorized)])
    def service_stats():
        counts = store.counts()
        counts["retraining_examples"] = len(store.retraining_examples())
        return counts

    @app.post("/v1/corpus/export", dependencies=[Depends(authorized)])
    def export(req: ExportRequest):
        corpus, lines = export_retraining_corpus(store, since=req.since)
        return Response(
            content=corpus,
            media_type="application/jsonl",
            headers={"X-Corpus-Lines": str(lines)},
        )

    return app


def _read_artifact(path: str | Path | None, fallback):
    if path is None:
        return fallback
    p = Path(path)
    if not p.exists():
        return fallback
    return json.loads(p.read_text(encoding="utf-8"))
