"""FastAPI wiring for the session service."""

from __future__ import annotations

import logging

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..oracle import Answer, NEW_EXEMPLAR, Question
from .manager import ServiceError, Session, SessionManager
from .schemas import (
    AnswerRequest,
    AnswerResponse,
    CreateSessionRequest,
    CreateSessionResponse,
    QuestionPayload,
    SceneResponse,
    SceneSummary,
    StateResponse,
)

log = logging.getLogger(__name__)


def _error_response(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"kind": kind, "message": message}})


def _scene_summary(session: Session, scene_id: str) -> SceneSummary:
    grid = session.scene_grid(scene_id)
    cells = grid.mean(axis=0)
    return SceneSummary(
        scene_id=scene_id,
        width=cells.shape[1],
        height=cells.shape[0],
        cells=[[round(float(v), 4) for v in row] for row in cells],
    )


def _known_part_names(session: Session, category: str) -> list[str]:
    """Names the annotator has already provided for this category."""
    naming_qids = {
        e["qid"]
        for e in session.event_log.of_type("question")
        if e["kind"] == "naming" and e["category"] == category
    }
    names: list[str] = []
    for e in session.event_log.of_type("answer"):
        if e["kind"] == "naming" and e["qid"] in naming_qids and e.get("names"):
            names = list(e["names"])
    return names


def _question_payload(session: Session, question: Question) -> QuestionPayload:
    payload = QuestionPayload(
        qid=question.qid,
        kind=question.kind,
        category=question.category,
        prompt=question.prompt,
        scene_id=question.scene_id,
        part_name=question.part_name,
        proposed_box=question.proposed_box,
        anchor_scene_id=question.anchor_scene_id,
        known_anchors=list(question.known_anchors),
        part_names=_known_part_names(session, question.category),
    )
    if question.scene_id is not None:
        payload.scene = _scene_summary(session, question.scene_id)
    if question.anchor_scene_id is not None:
        payload.anchor_scene = _scene_summary(session, question.anchor_scene_id)
    if question.kind == NEW_EXEMPLAR:
        payload.pool_scene_ids = [s.scene_id for s in session.world.pools[question.category]]
    return payload


def _validate_box(box, grid_size: int) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = (float(v) for v in box)
    if not (x0 < x1 and y0 < y1):
        raise ServiceError("bad-box", f"box {box} has no area", 422)
    if x0 < 0 or y0 < 0 or x1 > grid_size or y1 > grid_size:
        raise ServiceError("bad-box", f"box {box} leaves the {grid_size}x{grid_size} grid", 422)
    return (x0, y0, x1, y1)


def _to_answer(session: Session, body: AnswerRequest) -> Answer:
    grid_size = session.world.config.grid_size
    box = _validate_box(body.box, grid_size) if body.box is not None else None
    boxes = {}
    if body.boxes:
        for name, b in body.boxes.items():
            boxes[name] = _validate_box(b, grid_size)
    if body.scene_id is not None:
        session.scene_grid(body.scene_id)  # 404 on unknown scene
    return Answer(
        kind=body.kind,
        yes=body.yes,
        names=tuple(body.names) if body.names else (),
        box=box,
        scene_id=body.scene_id,
        boxes=boxes,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="aogqa session service", version="0.1.0")
    manager = SessionManager()
    app.state.manager = manager

    @app.exception_handler(ServiceError)
    async def _service_error(_: Request, exc: ServiceError):
        return _error_response(exc.status, exc.kind, exc.message)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return _error_response(422, "validation", str(exc.errors()))

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError):
        return _error_response(422, "invalid-value", str(exc))

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(body: CreateSessionRequest):
        session = manager.create(body.world, body.engine, body.mode)
        return CreateSessionResponse(session_id=session.session_id, mode=session.mode)

    @app.get("/sessions/{session_id}/question", response_model=QuestionPayload)
    def next_question(session_id: str):
        session = manager.get(session_id)
        question = session.pending_question()
        if question is None:
            return Response(status_code=204)
        return _question_payload(session, question)

    @app.post("/sessions/{session_id}/answer", response_model=AnswerResponse)
    def submit_answer(session_id: str, body: AnswerRequest):
        session = manager.get(session_id)
        answer = _to_answer(session, body)
        session.submit(answer, body.qid)
        snap = session.snapshot()
        return AnswerResponse(
            ok=True,
            answered_qid=body.qid,
            cumulative_cost=snap["ledger"].get("cumulative_cost", 0.0),
            records=len(snap["ledger"].get("records", [])),
        )

    @app.get("/sessions/{session_id}/state", response_model=StateResponse)
    def get_state(session_id: str):
        session = manager.get(session_id)
        snap = session.snapshot()
        return StateResponse(
            session_id=session.session_id,
            mode=session.mode,
            finished=session.finished,
            failed=session.error is not None,
            error=session.error,
            pending_question=session.pending_question() is not None,
            answered=session.answered,
            ledger=snap["ledger"],
            poses=snap["poses"],
        )

    @app.get("/scenes/{scene_ref}", response_model=SceneResponse)
    def get_scene(scene_ref: str):
        if ":" not in scene_ref:
            raise ServiceError(
                "bad-scene-ref", "scene references look like <session>:<scene>", 422
            )
        session_id, scene_id = scene_ref.split(":", 1)
        session = manager.get(session_id)
        grid = session.scene_grid(scene_id)
        scene = session.world.scene(scene_id)
        return SceneResponse(
            scene_id=scene_id,
            keyword=scene.keyword,
            channels=grid.shape[0],
            width=grid.shape[2],
            height=grid.shape[1],
            grid=[[[round(float(v), 6) for v in row] for row in channel] for channel in grid],
        )

    return app
