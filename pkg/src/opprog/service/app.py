"""HTTP+JSON API over the annotation store."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..datakit import ProblemRecord, load_dataset
from ..categorize import load_lexicon
from ..registry import load_constants, load_registry
from .config import ServiceConfig
from .state import AnnotationStore, ServiceError


class CreateSessionBody(BaseModel):
    problem_id: str
    annotator_id: str = "anonymous"


class ApplyBody(BaseModel):
    op: str
    args: list[str] = Field(default_factory=list)


class VoteBody(BaseModel):
    annotator_id: str
    valid: bool


class TestAnswerBody(BaseModel):
    correct: bool


def build_store(config: ServiceConfig) -> AnnotationStore:
    problems: list[ProblemRecord] = []
    registry = load_registry(config.registry_path) if config.registry_path else None
    consts = load_constants(config.constants_path) if config.constants_path else None
    lexicon = load_lexicon(config.lexicon_path) if config.lexicon_path else None
    if config.dataset_path:
        problems, _ = load_dataset(config.dataset_path, registry, consts)
    return AnnotationStore(
        problems, registry=registry, consts=consts, lexicon=lexicon,
        gate=config.gate(), trust_threshold=config.trust_threshold,
        event_log_path=config.event_log_path,
    )


def create_app(store: AnnotationStore | None = None,
               config: ServiceConfig | None = None) -> FastAPI:
    if store is None:
        store = build_store(config or ServiceConfig())
    app = FastAPI(title="opprog annotation service")
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "message": str(exc)})

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        session = store.create_session(body.problem_id, body.annotator_id)
        return session.payload(store.problem(session.problem_id))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.session(session_id)
        return session.payload(store.problem(session.problem_id))

    @app.post("/sessions/{session_id}/ops")
    def apply_operation(session_id: str, body: ApplyBody):
        session = store.apply_operation(session_id, body.op, body.args)
        return session.payload(store.problem(session.problem_id))

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = store.undo(session_id)
        return session.payload(store.problem(session.problem_id))

    @app.post("/sessions/{session_id}/submit")
    def submit(session_id: str):
        return store.submit(session_id)

    @app.get("/validation/next")
    def next_validation(annotator: str, exclude: str = ""):
        skip = [t for t in exclude.split(",") if t]
        task = store.next_validation_task(annotator, skip)
        if task is None:
            return {"task": None}
        return {"task": task.payload(store.problem(task.problem_id))}

    @app.post("/validation/{task_id}/vote")
    def vote(task_id: str, body: VoteBody):
        task = store.cast_vote(task_id, body.annotator_id, body.valid)
        return task.payload(store.problem(task.problem_id))

    @app.get("/problems/{problem_id}")
    def get_problem(problem_id: str):
        return store.problem_payload(problem_id)

    @app.get("/registry")
    def get_registry():
        return store.registry_payload()

    @app.post("/annotators/{annotator_id}/test-answers")
    def test_answer(annotator_id: str, body: TestAnswerBody):
        return store.record_test_answer(annotator_id, body.correct).payload()

    @app.get("/annotators/{annotator_id}")
    def get_annotator(annotator_id: str):
        return store.annotator(annotator_id).payload()

    return app
