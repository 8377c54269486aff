"""HTTP front for the survey engine.

JSON in, JSON out.  Designs are exposed as tessellated meshes so the
browser client never needs the geometry code.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from ..config import ConfigError, config_from_dict
from ..geometry import DEFAULT_RESOLUTION, MAX_RESOLUTION, tessellate
from .engine import AnswerError, StateError, Study


class AnswerBody(BaseModel):
    type: str
    value: str


class StudyBody(BaseModel):
    config: dict = {}


def create_app(studies: dict[str, Study] | None = None) -> FastAPI:
    app = FastAPI(title="formchoice survey service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry: dict[str, Study] = studies if studies is not None else {}
    app.state.studies = registry

    def _study_of_session(session_id: str) -> Study:
        for study in registry.values():
            if session_id in study._sessions:
                return study
        raise HTTPException(404, f"unknown session {session_id!r}")

    def _study_of_design(design_id: str) -> Study:
        for study in registry.values():
            if design_id in study._design_index:
                return study
        raise HTTPException(404, f"unknown design {design_id!r}")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "studies": sorted(registry)}

    @app.post("/studies", status_code=201)
    def create_study(body: StudyBody) -> dict:
        try:
            config = config_from_dict(body.config)
        except ConfigError as exc:
            raise HTTPException(422, str(exc))
        if config.study_id in registry:
            raise HTTPException(409, f"study {config.study_id!r} already exists")
        registry[config.study_id] = Study(config)
        return {"study_id": config.study_id, "config": config.to_dict()}

    @app.post("/studies/{study_id}/sessions", status_code=201)
    def create_session(study_id: str) -> dict:
        study = registry.get(study_id)
        if study is None:
            raise HTTPException(404, f"unknown study {study_id!r}")
        return study.create_session()

    @app.get("/sessions/{session_id}/next")
    def next_question(session_id: str) -> dict:
        study = _study_of_session(session_id)
        try:
            return study.next_question(session_id)
        except StateError as exc:
            raise HTTPException(409, str(exc))

    @app.post("/sessions/{session_id}/answer")
    def submit_answer(session_id: str, body: AnswerBody) -> dict:
        study = _study_of_session(session_id)
        try:
            return study.submit_answer(session_id, {"type": body.type, "value": body.value})
        except AnswerError as exc:
            raise HTTPException(422, str(exc))
        except StateError as exc:
            raise HTTPException(409, str(exc))

    @app.get("/designs/{design_id}/mesh")
    def design_mesh(
        design_id: str,
        resolution: int = Query(DEFAULT_RESOLUTION, ge=1, le=MAX_RESOLUTION),
    ) -> dict:
        study = _study_of_design(design_id)
        vector = study.design_vector(design_id)
        return tessellate(vector, resolution).to_wire()

    @app.post("/studies/{study_id}/finalize")
    def finalize(study_id: str, hb_iterations: int = 20000,
                 hb_burn_in: int = 10000, hb_thin: int = 10) -> dict:
        study = registry.get(study_id)
        if study is None:
            raise HTTPException(404, f"unknown study {study_id!r}")
        try:
            report = study.finalize(hb_iterations=hb_iterations,
                                    hb_burn_in=hb_burn_in, hb_thin=hb_thin)
        except StateError as exc:
            raise HTTPException(409, str(exc))
        return report.summary()

    return app
