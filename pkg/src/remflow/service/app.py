"""HTTP JSON API over the session store.

Errors use one JSON shape {code, message, detail} with conventional status
codes: 422 bad input, 404 unknown session or artifact, 409 wrong state,
502 provider failures.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from ..errors import (NotFoundError, ProviderProtocolError,
                      ProviderUnavailableError, RemflowError, ValidationError,
                      WrongStateError)
from ..imageio import load_mask, photo_to_bytes
from ..preprocess import fit_axes
from .overlay import render_overlay
from .sessions import RefinementSession, SessionStore

_STATUS = {
    ValidationError: 422,
    NotFoundError: 404,
    WrongStateError: 409,
    ProviderUnavailableError: 502,
    ProviderProtocolError: 502,
}


def _status_for(exc: RemflowError) -> int:
    for klass, status in _STATUS.items():
        if isinstance(exc, klass):
            return status
    return 500


class GenerateBody(BaseModel):
    checkpoint: str


class RefineBody(BaseModel):
    text: str | None = None
    template_id: str | None = None
    params: dict | None = None
    provider_id: str = "mock"


class AcceptBody(BaseModel):
    iteration: int


def session_payload(session: RefinementSession) -> dict:
    return session.to_dict()


def create_app(data_root: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="remflow service")
    store = SessionStore(data_root)
    app.state.store = store

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(RemflowError)
    async def remflow_error_handler(request: Request, exc: RemflowError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"code": exc.code, "message": exc.message,
                                     "detail": exc.detail})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(photo: UploadFile = File(...),
                             ground_truth: UploadFile | None = File(None)):
        photo_bytes = await photo.read()
        truth_bytes = await ground_truth.read() if ground_truth is not None else None
        session = store.create_session(photo_bytes, truth_bytes)
        return {"id": session.id, "state": session.state}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_payload(store.load(session_id))

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody):
        return session_payload(store.run_generate(session_id, body.checkpoint))

    @app.post("/sessions/{session_id}/refine")
    def refine_session(session_id: str, body: RefineBody):
        session, clarification = store.run_refine(
            session_id, text=body.text, template_id=body.template_id,
            params=body.params, provider_id=body.provider_id)
        iteration = None if clarification else len(session.iterations) - 1
        return {"session": session_payload(session),
                "clarification": clarification,
                "iteration": iteration}

    @app.post("/sessions/{session_id}/accept")
    def accept(session_id: str, body: AcceptBody):
        return session_payload(store.accept_iteration(session_id, body.iteration))

    @app.get("/sessions/{session_id}/overlay/{iteration}")
    def overlay(session_id: str, iteration: int):
        session = store.load(session_id)
        if not session.ground_truth:
            raise ValidationError("overlay needs a ground-truth mask")
        if not 0 <= iteration < len(session.iterations):
            raise ValidationError(f"iteration {iteration} does not exist")
        sdir = store.session_dir(session_id)
        phase2 = load_mask(sdir / session.phase2_mask)
        truth = load_mask(sdir / session.ground_truth)
        truth = fit_axes(truth.astype(np.float32), *phase2.shape) >= 0.5
        refined = load_mask(sdir / session.iterations[iteration].output_mask)
        image = render_overlay(truth, phase2, refined)
        return Response(content=photo_to_bytes(image.astype(np.float32) / 255.0),
                        media_type="image/png")

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, format: str = "svg"):
        data = store.export_session(session_id, format)
        media = "image/svg+xml" if format == "svg" else "application/dxf"
        filename = f"{session_id}.{format}"
        return Response(content=data, media_type=media,
                        headers={"Content-Disposition":
                                 f'attachment; filename="{filename}"'})

    @app.get("/sessions/{session_id}/files/{name}")
    def artifact(session_id: str, name: str):
        path = store.artifact_path(session_id, name)
        return Response(content=path.read_bytes(), media_type="image/png")

    return app
