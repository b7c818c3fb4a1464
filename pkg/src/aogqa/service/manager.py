"""Session lifecycle: one learning loop per session, one writer thread each.

The loop runs in a worker thread. In live mode every question blocks the
loop on a condition variable until an answer arrives over HTTP; the answer
acknowledgment in turn waits until the loop has consumed it, so a client
that got its ack knows the loop has moved on.
"""

from __future__ import annotations

import copy
import logging
import threading

import numpy as np

from ..engine import EngineConfig, LoopResult, run_learning_loop
from ..ledger import EventLog
from ..oracle import Answer, AnswerSource, Question, check_answer_kind
from ..world import World, WorldConfig, generate_world
from ..costs import CostModel
from ..learning import MiningConfig

log = logging.getLogger(__name__)


class ServiceError(Exception):
    def __init__(self, kind: str, message: str, status: int = 400):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.status = status


class AnswerBridge(AnswerSource):
    """Hands questions from the loop thread to HTTP and answers back."""

    def __init__(self):
        self._cond = threading.Condition()
        self._question: Question | None = None
        self._answer: Answer | None = None
        self._closed = False

    def answer(self, question: Question) -> Answer:
        with self._cond:
            self._question = question
            self._answer = None
            self._cond.notify_all()
            while self._answer is None and not self._closed:
                self._cond.wait()
            if self._closed:
                raise RuntimeError("session closed while waiting for an answer")
            answer = self._answer
            # consuming the answer clears the pending slot; submit() watches this
            self._question = None
            self._answer = None
            self._cond.notify_all()
            return answer

    def current_question(self) -> Question | None:
        with self._cond:
            return self._question

    def submit(self, answer: Answer, qid: int) -> None:
        with self._cond:
            if self._question is None:
                raise ServiceError("no-pending-question", "no question is awaiting an answer", 409)
            if self._question.qid != qid:
                raise ServiceError(
                    "stale-question",
                    f"answer targets question {qid} but {self._question.qid} is pending",
                    409,
                )
            check_answer_kind(self._question, answer)
            self._answer = answer
            self._cond.notify_all()
            # ack only after the loop picked the answer up
            while self._question is not None and self._answer is not None and not self._closed:
                self._cond.wait()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class Session:
    def __init__(self, session_id: str, world_doc: dict, engine_doc: dict, mode: str):
        self.session_id = session_id
        self.mode = mode
        world_cfg = WorldConfig.from_dict(world_doc)
        engine_doc = dict(engine_doc)
        cost = CostModel.from_dict(engine_doc.pop("cost", {}))
        mining = MiningConfig(**engine_doc.pop("mining", {}))
        self.engine_config = EngineConfig(cost=cost, mining=mining, **engine_doc)
        self.world: World = generate_world(world_cfg)
        self.bridge: AnswerBridge | None = None
        if mode == "live":
            self.bridge = AnswerBridge()
            self.source: AnswerSource = self.bridge
        else:
            from ..oracle import SimulatedOracle

            self.source = SimulatedOracle(
                self.world, error_rate=world_cfg.oracle_error, seed=world_cfg.seed
            )
        self.result: LoopResult | None = None
        self.error: str | None = None
        self.finished = False
        self.answered = 0
        self._lock = threading.Lock()
        self._snapshot: dict = {"cumulative_cost": 0.0, "records": [], "losses": {}}
        self._poses: list[dict] = []
        self.event_log = EventLog()
        self._thread = threading.Thread(target=self._run, name=f"loop-{session_id}", daemon=True)
        self._thread.start()

    def _publish(self, state, record) -> None:
        with self._lock:
            self._snapshot = copy.deepcopy(state.ledger.snapshot())
            self._poses = [
                {
                    "key": pose.key,
                    "category": pose.category,
                    "parts": len(pose.parts),
                    "semantic_parts": [p.name for p in pose.semantic_parts()],
                    "confirmed": len(state.confirmed.get(pose.key, [])),
                }
                for pose in state.aog.poses()
            ]

    def _run(self) -> None:
        try:
            self.result = run_learning_loop(
                self.world,
                self.engine_config,
                self.source,
                self.event_log,
                on_record=self._publish,
            )
        except Exception as exc:  # surfaced through /state
            log.exception("session %s failed", self.session_id)
            self.error = f"{type(exc).__name__}: {exc}"
        finally:
            self.finished = True
            if self.bridge is not None:
                self.bridge.close()

    def snapshot(self) -> dict:
        with self._lock:
            return {"ledger": copy.deepcopy(self._snapshot), "poses": list(self._poses)}

    def pending_question(self) -> Question | None:
        if self.bridge is None:
            return None
        return self.bridge.current_question()

    def submit(self, answer: Answer, qid: int) -> None:
        if self.bridge is None:
            raise ServiceError(
                "oracle-session", "this session answers its own questions", 409
            )
        if self.finished:
            raise ServiceError("finished", "the learning loop has already finished", 409)
        self.bridge.submit(answer, qid)
        self.answered += 1

    def scene_grid(self, scene_id: str) -> np.ndarray:
        try:
            return self.world.scene(scene_id).grid
        except KeyError:
            raise ServiceError("unknown-scene", f"no scene {scene_id!r}", 404) from None


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def create(self, world_doc: dict, engine_doc: dict, mode: str) -> Session:
        with self._lock:
            self._counter += 1
            session_id = f"s{self._counter}"
            session = Session(session_id, world_doc, engine_doc, mode)
            self._sessions[session_id] = session
            return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise ServiceError("unknown-session", f"no session {session_id!r}", 404)
        return session
