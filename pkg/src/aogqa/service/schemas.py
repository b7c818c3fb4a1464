"""Wire models for the session service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

BoxModel = tuple[float, float, float, float]


class CreateSessionRequest(BaseModel):
    mode: Literal["oracle", "live"] = "oracle"
    world: dict = Field(default_factory=dict)
    engine: dict = Field(default_factory=dict)


class CreateSessionResponse(BaseModel):
    session_id: str
    mode: str


class SceneSummary(BaseModel):
    """Down-sampled view for rendering: per-cell mean over channels."""

    scene_id: str
    width: int
    height: int
    cells: list[list[float]]


class QuestionPayload(BaseModel):
    qid: int
    kind: str
    category: str
    prompt: str = ""
    scene_id: str | None = None
    part_name: str | None = None
    proposed_box: BoxModel | None = None
    anchor_scene_id: str | None = None
    known_anchors: list[str] = Field(default_factory=list)
    part_names: list[str] = Field(default_factory=list)
    pool_scene_ids: list[str] = Field(default_factory=list)
    scene: SceneSummary | None = None
    anchor_scene: SceneSummary | None = None


class AnswerRequest(BaseModel):
    qid: int
    kind: str
    yes: bool | None = None
    names: list[str] | None = None
    box: BoxModel | None = None
    scene_id: str | None = None
    boxes: dict[str, BoxModel] | None = None


class AnswerResponse(BaseModel):
    ok: bool
    answered_qid: int
    cumulative_cost: float
    records: int


class StateResponse(BaseModel):
    session_id: str
    mode: str
    finished: bool
    failed: bool = False
    error: str | None = None
    pending_question: bool
    answered: int
    ledger: dict
    poses: list[dict] = Field(default_factory=list)


class SceneResponse(BaseModel):
    """Full grid for debugging; carries no ground truth."""

    scene_id: str
    keyword: str
    channels: int
    width: int
    height: int
    grid: list[list[list[float]]]


class ErrorDetail(BaseModel):
    kind: str
    message: str


class ErrorBody(BaseModel):
    error: ErrorDetail
