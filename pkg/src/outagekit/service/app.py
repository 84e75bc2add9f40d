"""HTTP API over the orchestrator.

Stream transport is line-delimited JSON with a resumable `from_seq`
cursor: the endpoint replays persisted records, then (if `tail_ms` is
set) keeps the connection open for live records. A plain polling
endpoint (`/records`) serves clients that prefer to reconnect.
"""

from __future__ import annotations

import json
import os
import queue

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..errors import OutageKitError
from ..orchestrator import Orchestrator
from ..perception import RawSignal
from ..util import parse_ts


class IncidentCreate(BaseModel):
    incident_id: str
    title: str = ""
    ts: int | str = 0


class SignalIn(BaseModel):
    ts: int | str
    modality: str
    source: str
    payload: str
    attrs: dict = {}


class FeedbackIn(BaseModel):
    ts: int | str
    human_action_text: str
    rec_id: str | None = None
    disposition_hint: str | None = None
    result: str = "unknown"


class KcaAuthorIn(BaseModel):
    kca_id: str
    key: dict
    condition: str
    action_template: str
    slots: list[str] = []
    actor: str = "expert"
    now_ms: int = 0


class KcaPatchIn(BaseModel):
    kca_id: str
    op: str = "edit"  # edit | deactivate
    condition: str | None = None
    key: dict | None = None
    action_template: str | None = None
    slots: list[str] | None = None
    actor: str = "expert"
    now_ms: int = 0


class PlaybookIn(BaseModel):
    doc_id: str
    body: str
    title: str = ""
    service: str = ""
    now_ms: int = 0


def create_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="outagekit")
    app.state.orchestrator = orchestrator
    token = os.environ.get("OUTAGEKIT_TOKEN")

    @app.middleware("http")
    async def auth(request: Request, call_next):
        if token and request.url.path != "/healthz":
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(
                    {"code": "unauthorized", "message": "bad token"},
                    status_code=401,
                )
        return await call_next(request)

    @app.exception_handler(OutageKitError)
    async def handle_pipeline_error(_request, exc: OutageKitError):
        status = {
            "unknown_incident": 404,
            "not_found": 404,
            "incident_closed": 409,
            "already_promoted": 409,
        }.get(exc.code, 422)
        return JSONResponse(
            {"code": exc.code, "message": str(exc)}, status_code=status
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/incidents", status_code=201)
    def create_incident(body: IncidentCreate):
        handle = orchestrator.create_incident(
            body.incident_id, body.title, parse_ts(body.ts)
        )
        return handle.to_dict()

    @app.post("/incidents/{incident_id}/signals", status_code=202)
    def ingest(incident_id: str, body: SignalIn):
        sig = RawSignal(
            incident_id=incident_id,
            ts=parse_ts(body.ts),
            modality=body.modality,
            source=body.source,
            payload=body.payload,
            attrs=dict(body.attrs),
        )
        seq = orchestrator.ingest_signal(incident_id, sig)
        return {"accepted": True, "seq": seq}

    @app.get("/incidents/{incident_id}/records")
    def records(incident_id: str, from_seq: int = Query(0)):
        return {
            "records": [r.to_dict() for r in
                        orchestrator.stream(incident_id, from_seq)]
        }

    @app.get("/incidents/{incident_id}/stream")
    def stream(incident_id: str, from_seq: int = Query(0),
               tail_ms: int = Query(0)):
        existing = orchestrator.stream(incident_id, from_seq)

        def generate():
            last_seq = from_seq
            for record in existing:
                last_seq = record.seq
                yield json.dumps(record.to_dict(), sort_keys=True) + "\n"
            if tail_ms <= 0:
                return
            q: queue.Queue = queue.Queue()
            orchestrator.add_listener(incident_id, q.put)
            try:
                # pick up anything emitted between the snapshot and the
                # listener registration
                for record in orchestrator.stream(incident_id, last_seq):
                    last_seq = record.seq
                    yield json.dumps(record.to_dict(), sort_keys=True) + "\n"
                deadline = tail_ms / 1000.0
                while True:
                    try:
                        record = q.get(timeout=deadline)
                    except queue.Empty:
                        return
                    if record.seq > last_seq:
                        last_seq = record.seq
                        yield json.dumps(record.to_dict(),
                                         sort_keys=True) + "\n"
            finally:
                orchestrator.remove_listener(incident_id, q.put)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.get("/incidents/{incident_id}/recommendations")
    def recommendations(incident_id: str):
        return {
            "recommendations": [
                r.to_dict() for r in orchestrator.recommendations(incident_id)
            ]
        }

    @app.post("/incidents/{incident_id}/feedback")
    def feedback(incident_id: str, body: FeedbackIn):
        fb = orchestrator.post_feedback(incident_id, {
            "ts": parse_ts(body.ts),
            "human_action_text": body.human_action_text,
            "rec_id": body.rec_id,
            "disposition_hint": body.disposition_hint,
            "result": body.result,
        })
        return fb.to_dict()

    @app.post("/incidents/{incident_id}/close")
    def close(incident_id: str, ts: int | str = Query(0)):
        # query params arrive as strings; short digit runs are epoch ms
        if isinstance(ts, str) and ts.lstrip("-").isdigit():
            ts = int(ts)
        return orchestrator.close_incident(incident_id, parse_ts(ts))

    @app.get("/memory/kca")
    def kca_list():
        return {"entries": orchestrator.kca_store.expert_review("list", {})}

    @app.post("/memory/kca", status_code=201)
    def kca_author(body: KcaAuthorIn):
        kca_id = orchestrator.kca_admin("author", body.model_dump(),
                                        now_ms=body.now_ms)
        return {"kca_id": kca_id}

    @app.patch("/memory/kca")
    def kca_patch(body: KcaPatchIn):
        payload = {k: v for k, v in body.model_dump().items()
                   if v is not None and k not in ("op", "now_ms")}
        kca_id = orchestrator.kca_admin(body.op, payload, now_ms=body.now_ms)
        return {"kca_id": kca_id}

    @app.post("/memory/playbooks", status_code=201)
    def playbook(body: PlaybookIn):
        return orchestrator.add_playbook(
            body.doc_id, body.body, body.title, body.service, body.now_ms
        )

    @app.post("/memory/consolidate")
    def consolidate(now_ms: int = Query(0)):
        return orchestrator.consolidate(now_ms)

    return app
