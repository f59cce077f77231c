"""In-memory annotation state with an append-only event log.

All mutations go through command methods; each command appends one event, so
the full state can be rebuilt by replaying the log. A single re-entrant lock
serializes mutations (per-session serialization follows trivially); reads of
immutable snapshots do not need it.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..categories import Category
from ..categorize import CategoryLexicon, classify, default_lexicon
from ..datakit import ProblemRecord
from ..errors import DomainViolation, OpProgError
from ..evalkit import MatchConfig
from ..program import (
    ArgRef,
    Intermediate,
    OpCall,
    ProblemNumber,
    Program,
    format_arg,
    parse_arg_token,
    serialize_program,
)
from ..registry import ConstTable, OpRegistry, default_constants, default_registry
from ..textnum import extract_numbers, extract_option_values


class ServiceError(OpProgError):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.status = status


def _err(code: str, message: str, status: int = 400) -> ServiceError:
    return ServiceError(code, message, status)


@dataclass
class HistoryItem:
    op: str
    args: tuple[ArgRef, ...]
    value: float

    def payload(self) -> dict:
        return {"op": self.op, "args": [format_arg(a) for a in self.args],
                "value": self.value}


@dataclass
class Session:
    session_id: str
    problem_id: str
    annotator_id: str
    category: Category
    palette: list[str]
    numbers: list[float]
    seed_args: list[tuple[ArgRef, float]]
    history: list[HistoryItem] = field(default_factory=list)
    status: str = "open"  # open | submitted | abandoned

    def valid_args(self) -> list[tuple[ArgRef, float]]:
        return self.seed_args + [(Intermediate(i), h.value)
                                 for i, h in enumerate(self.history)]

    def program(self) -> Program:
        return Program(tuple(OpCall(h.op, h.args) for h in self.history))

    def payload(self, problem: ProblemRecord) -> dict:
        return {
            "session_id": self.session_id,
            "problem_id": self.problem_id,
            "annotator_id": self.annotator_id,
            "problem": problem.problem,
            "options": list(problem.options),
            "category": self.category.value,
            "palette": list(self.palette),
            "status": self.status,
            "valid_args": [{"ref": format_arg(r), "value": v}
                           for r, v in self.valid_args()],
            "history": [h.payload() for h in self.history],
        }


@dataclass
class ValidationTask:
    task_id: str
    problem_id: str
    submitter: str
    program: Program
    step_values: list[float]
    votes: list[tuple[str, bool]] = field(default_factory=list)
    resolution: str = "pending"  # pending | accepted | rejected

    def payload(self, problem: ProblemRecord) -> dict:
        return {
            "task_id": self.task_id,
            "problem_id": self.problem_id,
            "problem": problem.problem,
            "options": list(problem.options),
            "correct": problem.correct,
            "program": serialize_program(self.program),
            "steps": [
                {"op": c.op, "args": [format_arg(a) for a in c.args], "value": v}
                for c, v in zip(self.program.calls, self.step_values)
            ],
            "votes": len(self.votes),
            "resolution": self.resolution,
        }


@dataclass
class AnnotatorRecord:
    annotator_id: str
    test_correct: int = 0
    test_total: int = 0
    trusted: bool = True

    def accuracy(self) -> float:
        return self.test_correct / self.test_total if self.test_total else 1.0

    def payload(self) -> dict:
        return {"annotator_id": self.annotator_id, "test_correct": self.test_correct,
                "test_total": self.test_total, "trusted": self.trusted}


class AnnotationStore:
    def __init__(
        self,
        problems: Iterable[ProblemRecord],
        registry: OpRegistry | None = None,
        consts: ConstTable | None = None,
        lexicon: CategoryLexicon | None = None,
        gate: MatchConfig | None = None,
        trust_threshold: float = 0.8,
        event_log_path: str | Path | None = None,
    ):
        self.registry = registry or default_registry()
        self.consts = consts or default_constants()
        self.lexicon = lexicon or default_lexicon()
        self.gate = gate or MatchConfig()
        self.trust_threshold = trust_threshold
        self.problems: dict[str, ProblemRecord] = {p.id: p for p in problems}
        self.sessions: dict[str, Session] = {}
        self.tasks: dict[str, ValidationTask] = {}
        self.annotators: dict[str, AnnotatorRecord] = {}
        self.validated: dict[str, Program] = {}  # problem_id -> accepted-and-validated
        self._counter = 0
        self._lock = threading.RLock()
        self._log_path = Path(event_log_path) if event_log_path else None
        self._replaying = False

    # ------------------------------------------------------------- events

    def _emit(self, kind: str, **payload) -> None:
        if self._replaying or self._log_path is None:
            return
        with self._log_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps({"event": kind, **payload}) + "\n")

    def replay_events(self, path: str | Path) -> int:
        """Re-execute a log produced by _emit; returns the number of events."""
        handlers = {
            "create_session": lambda e: self.create_session(
                e["problem_id"], e.get("annotator_id", "anonymous")),
            "apply": lambda e: self.apply_operation(
                e["session_id"], e["op"], e["args"]),
            "undo": lambda e: self.undo(e["session_id"]),
            "submit": lambda e: self.submit(e["session_id"]),
            "vote": lambda e: self.cast_vote(
                e["task_id"], e["annotator_id"], e["valid"]),
            "test_answer": lambda e: self.record_test_answer(
                e["annotator_id"], e["correct"]),
        }
        count = 0
        self._replaying = True
        try:
            for line in Path(path).read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                handlers[event["event"]](event)
                count += 1
        finally:
            self._replaying = False
        return count

    # ------------------------------------------------------------ helpers

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    def problem(self, problem_id: str) -> ProblemRecord:
        try:
            return self.problems[problem_id]
        except KeyError:
            raise _err("unknown_problem", f"no problem {problem_id!r}", 404) from None

    def session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise _err("unknown_session", f"no session {session_id!r}", 404) from None

    def annotator(self, annotator_id: str) -> AnnotatorRecord:
        if annotator_id not in self.annotators:
            self.annotators[annotator_id] = AnnotatorRecord(annotator_id)
        return self.annotators[annotator_id]

    def _correct_option_value(self, problem: ProblemRecord) -> float | None:
        options = extract_option_values(problem.options)
        target = next((o for o in options if o.label == problem.correct), None)
        return target.value if target else None

    # ----------------------------------------------------------- sessions

    def create_session(self, problem_id: str, annotator_id: str = "anonymous") -> Session:
        with self._lock:
            problem = self.problem(problem_id)
            category = problem.category or classify(problem.problem, self.lexicon)
            numbers = [m.value for m in extract_numbers(problem.problem)]
            seed_args: list[tuple[ArgRef, float]] = [
                (ProblemNumber(i), v) for i, v in enumerate(numbers)
            ]
            seed_args += [(ref, value) for ref, value in (
                (parse_arg_token(name), float(v)) for name, v in self.consts.items())]
            session = Session(
                session_id=self._next_id("s"),
                problem_id=problem_id,
                annotator_id=annotator_id,
                category=category,
                palette=self.registry.palette(category),
                numbers=numbers,
                seed_args=seed_args,
            )
            self.sessions[session.session_id] = session
            self._emit("create_session", problem_id=problem_id, annotator_id=annotator_id)
            return session

    def apply_operation(self, session_id: str, op: str, arg_tokens: list[str]) -> Session:
        with self._lock:
            session = self.session(session_id)
            if session.status != "open":
                raise _err("session_not_open", "session is not open", 409)
            if op not in session.palette:
                raise _err("unknown_operation",
                           f"operation {op!r} is not in this session's palette", 400)
            spec = self.registry[op]
            if len(arg_tokens) != spec.arity:
                raise _err("invalid_argument",
                           f"{op} takes {spec.arity} arguments, got {len(arg_tokens)}", 400)
            valid = dict(session.valid_args())
            args: list[ArgRef] = []
            values: list[float] = []
            for token in arg_tokens:
                try:
                    ref = parse_arg_token(str(token))
                except OpProgError as e:
                    raise _err("invalid_argument", str(e), 400) from None
                if ref not in valid:
                    raise _err("invalid_argument",
                               f"{format_arg(ref)} is not a valid argument here", 400)
                args.append(ref)
                values.append(valid[ref])
            try:
                value = float(spec.fn(*values))
            except (DomainViolation, OverflowError, ZeroDivisionError, ValueError) as e:
                raise _err("domain_error", str(e) or e.__class__.__name__, 400) from None
            if value != value or value in (float("inf"), float("-inf")):
                raise _err("domain_error", "non-finite result", 400)
            session.history.append(HistoryItem(op, tuple(args), value))
            self._emit("apply", session_id=session_id, op=op,
                       args=[str(t) for t in arg_tokens])
            return session

    def undo(self, session_id: str) -> Session:
        with self._lock:
            session = self.session(session_id)
            if session.status != "open":
                raise _err("session_not_open", "session is not open", 409)
            if not session.history:
                raise _err("empty_history", "nothing to undo", 400)
            session.history.pop()
            self._emit("undo", session_id=session_id)
            return session

    def submit(self, session_id: str) -> dict:
        with self._lock:
            session = self.session(session_id)
            if session.status != "open":
                raise _err("session_not_open", "session is not open", 409)
            if not session.history:
                raise _err("empty_history", "cannot submit an empty program", 400)
            problem = self.problem(session.problem_id)
            uses_problem_number = any(
                isinstance(a, ProblemNumber) for h in session.history for a in h.args)
            final = session.history[-1].value
            target = self._correct_option_value(problem)
            verdict: dict = {"session_id": session_id, "final": final, "target": target}
            if not uses_problem_number:
                verdict.update(accepted=False, reason="no_problem_number")
            elif target is None or not self.gate.matches(final, target):
                verdict.update(accepted=False, reason="not_close")
            else:
                session.status = "submitted"
                task = ValidationTask(
                    task_id=self._next_id("t"),
                    problem_id=session.problem_id,
                    submitter=session.annotator_id,
                    program=session.program(),
                    step_values=[h.value for h in session.history],
                )
                self.tasks[task.task_id] = task
                verdict.update(accepted=True, reason=None, task_id=task.task_id)
            self._emit("submit", session_id=session_id)
            return verdict

    # --------------------------------------------------------- validation

    def next_validation_task(
        self, annotator_id: str, exclude: Iterable[str] = (),
    ) -> ValidationTask | None:
        excluded = set(exclude)
        with self._lock:
            record = self.annotator(annotator_id)
            if not record.trusted:
                raise _err("untrusted_annotator",
                           f"{annotator_id} is below the trust threshold", 403)
            for task in self.tasks.values():
                if task.resolution != "pending":
                    continue
                if task.task_id in excluded:
                    continue
                if task.submitter == annotator_id:
                    continue
                if any(a == annotator_id for a, _ in task.votes):
                    continue
                return task
            return None

    def cast_vote(self, task_id: str, annotator_id: str, valid: bool) -> ValidationTask:
        with self._lock:
            task = self.tasks.get(task_id)
            if task is None:
                raise _err("unknown_task", f"no task {task_id!r}", 404)
            record = self.annotator(annotator_id)
            if not record.trusted:
                raise _err("untrusted_annotator",
                           f"{annotator_id} is below the trust threshold", 403)
            if task.resolution != "pending":
                raise _err("task_closed", "task is already resolved", 409)
            if task.submitter == annotator_id:
                raise _err("own_submission", "cannot validate your own program", 403)
            if any(a == annotator_id for a, _ in task.votes):
                raise _err("duplicate_vote", "already voted on this task", 409)
            task.votes.append((annotator_id, bool(valid)))
            yes = sum(1 for _, v in task.votes if v)
            no = sum(1 for _, v in task.votes if not v)
            if yes >= 2:
                task.resolution = "accepted"
                self.validated[task.problem_id] = task.program
            elif no >= 2:
                task.resolution = "rejected"
            self._emit("vote", task_id=task_id, annotator_id=annotator_id,
                       valid=bool(valid))
            return task

    # -------------------------------------------------------------- trust

    def record_test_answer(self, annotator_id: str, correct: bool) -> AnnotatorRecord:
        with self._lock:
            record = self.annotator(annotator_id)
            record.test_total += 1
            if correct:
                record.test_correct += 1
            was_trusted = record.trusted
            record.trusted = (record.test_total == 0
                              or record.accuracy() >= self.trust_threshold)
            if was_trusted and not record.trusted:
                self._requeue(annotator_id)
            self._emit("test_answer", annotator_id=annotator_id, correct=bool(correct))
            return record

    def _requeue(self, annotator_id: str) -> None:
        """Drop the annotator's pending submissions back into the open pool;
        accepted-and-validated records are untouched."""
        for task_id in [t.task_id for t in self.tasks.values()
                        if t.submitter == annotator_id and t.resolution == "pending"]:
            del self.tasks[task_id]

    # ------------------------------------------------------------ queries

    def registry_payload(self) -> dict:
        return {
            "operations": [
                {
                    "name": s.name, "arity": s.arity, "category": s.category.value,
                    "commutative": s.commutative,
                    "hint": {"formula": s.hint.formula, "args": s.hint.args,
                             "explanation": s.hint.explanation},
                }
                for s in self.registry.specs
            ],
            "constants": [{"name": n, "value": v} for n, v in self.consts.items()],
        }

    def problem_payload(self, problem_id: str) -> dict:
        p = self.problem(problem_id)
        return {
            "id": p.id, "problem": p.problem, "options": list(p.options),
            "correct": p.correct,
            "category": (p.category.value if p.category
                         else classify(p.problem, self.lexicon).value),
            "validated_program": (serialize_program(self.validated[p.id])
                                  if p.id in self.validated else None),
        }
