"""Answer matching and evaluation: executed values against multiple-choice
options, beam selection, the decoder vocabulary builder, and the accuracy
harness with its seeded random fallback."""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .errors import EvalError, FormatError
from .evaluator import evaluate, validate_refs
from .program import Program, parse_program, serialize_program
from .registry import ConstTable, OpRegistry
from .textnum import OPTION_LABELS, OptionValue, extract_numbers

if TYPE_CHECKING:  # pragma: no cover
    from .datakit import ProblemRecord

# inference-time beam widths used as configuration defaults: the wide one
# suits decoding against the larger, noisier source corpus
DEFAULT_BEAM_SIZE = 100
WIDE_BEAM_SIZE = 200


@dataclass(frozen=True)
class MatchConfig:
    """Tolerances for value/option matching plus beam and RNG defaults.

    A value matches an option when their absolute difference is at most
    max(abs_tol, rel_tol * |option|).
    """
    abs_tol: float = 0.01
    rel_tol: float = 0.01
    beam_size: int = DEFAULT_BEAM_SIZE
    rng_seed: int = 0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")

    def matches(self, value: float, target: float) -> bool:
        return abs(value - target) <= max(self.abs_tol, self.rel_tol * abs(target))


def match_options(value: float, options: Sequence[OptionValue],
                  cfg: MatchConfig) -> list[OptionValue]:
    """Options within tolerance of the executed value; non-numeric options
    never match. Monotone in both tolerances."""
    return [o for o in options if o.value is not None and cfg.matches(value, o.value)]


@dataclass(frozen=True)
class PredictionBeam:
    problem_id: str
    programs: tuple[Program, ...]


@dataclass(frozen=True)
class BeamChoice:
    label: str
    rule: str  # unique_match | min_distance | fallback_random
    program_index: int | None = None
    value: float | None = None
    option_label: str | None = None
    distance: float | None = None
    reason: str | None = None


def _rng_for(seed: int, problem_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{problem_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _executed_values(
    programs: Sequence[Program],
    numbers: Sequence[float],
    registry: OpRegistry,
    consts: ConstTable | None,
) -> list[tuple[int, float]]:
    out = []
    for i, prog in enumerate(programs):
        if not validate_refs(prog, len(numbers), registry, consts).ok:
            continue
        try:
            trace = evaluate(prog, numbers, registry, consts)
        except EvalError:
            continue
        out.append((i, trace.final))
    return out


def select_from_beam(
    beam: PredictionBeam,
    numbers: Sequence[float],
    options: Sequence[OptionValue],
    registry: OpRegistry,
    consts: ConstTable | None,
    cfg: MatchConfig,
    *,
    uncategorized: bool = False,
) -> BeamChoice:
    """Pick an answer from a beam of candidate programs.

    Best-first, the first program whose value matches exactly one option
    decides. Failing that, the executable program/option pair at globally
    minimal absolute distance decides (ties: lower option label, then earlier
    program). If nothing executes, or the problem belongs to no category, the
    answer is drawn uniformly from the option labels using the seeded,
    per-problem random stream.
    """
    labels = [o.label for o in options] or list(OPTION_LABELS)
    if uncategorized:
        rng = _rng_for(cfg.rng_seed, beam.problem_id)
        return BeamChoice(rng.choice(labels), "fallback_random", reason="uncategorized")
    executed = _executed_values(beam.programs[:cfg.beam_size], numbers, registry, consts)
    for i, value in executed:
        matched = match_options(value, options, cfg)
        if len(matched) == 1:
            return BeamChoice(matched[0].label, "unique_match", program_index=i,
                              value=value, option_label=matched[0].label,
                              distance=abs(value - matched[0].value))
    best: BeamChoice | None = None
    for i, value in executed:
        for o in options:
            if o.value is None:
                continue
            d = abs(value - o.value)
            if best is None or d < best.distance or (
                d == best.distance and (labels.index(o.label), i)
                < (labels.index(best.option_label), best.program_index)
            ):
                best = BeamChoice(o.label, "min_distance", program_index=i,
                                  value=value, option_label=o.label, distance=d)
    if best is not None:
        return best
    rng = _rng_for(cfg.rng_seed, beam.problem_id)
    reason = "no_executable_program" if beam.programs else "empty_beam"
    if executed:
        reason = "no_numeric_options"
    return BeamChoice(rng.choice(labels), "fallback_random", reason=reason)


def build_program_vocabulary(
    problem_text: str,
    registry: OpRegistry,
    consts: ConstTable,
    max_steps: int,
) -> list[str]:
    """Decoder token pool: operation names in registry order, then constant
    names in table order, then n0..n{M-1} in text order, then #0..#{max_steps-1}."""
    tokens = list(registry.names)
    tokens += consts.names
    tokens += [f"n{i}" for i in range(len(extract_numbers(problem_text)))]
    tokens += [f"#{k}" for k in range(max_steps)]
    return tokens


@dataclass(frozen=True)
class CategoryOutcome:
    total: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class EvalReport:
    total: int
    correct: int
    per_category: tuple[tuple[str, CategoryOutcome], ...]
    fallback_random: int
    missing_beams: tuple[str, ...] = field(default=())

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_category": {
                c: {"total": o.total, "correct": o.correct, "accuracy": o.accuracy}
                for c, o in self.per_category
            },
            "fallback_random": self.fallback_random,
            "missing_beams": list(self.missing_beams),
        }


def evaluate_predictions(
    records: Sequence["ProblemRecord"],
    beams: Mapping[str, PredictionBeam] | Iterable[PredictionBeam],
    registry: OpRegistry,
    consts: ConstTable | None,
    cfg: MatchConfig,
) -> EvalReport:
    """Score beam predictions against record labels. Problems with no beam
    fall back to the seeded random choice and are reported."""
    if not isinstance(beams, Mapping):
        beams = {b.problem_id: b for b in beams}
    from .textnum import extract_option_values  # local to avoid shadowing

    correct = 0
    fallback = 0
    missing: list[str] = []
    per_cat: dict[str, list[int]] = {}
    for record in records:
        options = extract_option_values(record.options)
        labels = [o.label for o in options] or list(OPTION_LABELS)
        beam = beams.get(record.id)
        if beam is None:
            missing.append(record.id)
            rng = _rng_for(cfg.rng_seed, record.id)
            choice = BeamChoice(rng.choice(labels), "fallback_random", reason="missing_beam")
        else:
            numbers = [m.value for m in extract_numbers(record.problem)]
            choice = select_from_beam(
                beam, numbers, options, registry, consts, cfg,
                uncategorized=record.category is None,
            )
        if choice.rule == "fallback_random":
            fallback += 1
        cat = record.category.value if record.category else "(uncategorized)"
        bucket = per_cat.setdefault(cat, [0, 0])
        bucket[0] += 1
        if choice.label == record.correct:
            bucket[1] += 1
            correct += 1
    per_category = tuple(
        (c, CategoryOutcome(t, k)) for c, (t, k) in sorted(per_cat.items())
    )
    return EvalReport(total=len(records), correct=correct, per_category=per_category,
                      fallback_random=fallback, missing_beams=tuple(missing))


def render_report(report: EvalReport) -> str:
    """Aligned plain-text accuracy table."""
    rows = [("Category", "Total", "Correct", "Accuracy")]
    for cat, outcome in report.per_category:
        rows.append((cat, str(outcome.total), str(outcome.correct),
                     f"{100 * outcome.accuracy:.1f}"))
    rows.append(("All", str(report.total), str(report.correct),
                 f"{100 * report.accuracy:.1f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    lines.append(f"fallback-random answers: {report.fallback_random}")
    return "\n".join(lines)


def load_beams(source: str | Path) -> dict[str, PredictionBeam]:
    """Beam file: one JSON record per line, {"id": ..., "programs": [str, ...]}."""
    path = Path(source)
    beams: dict[str, PredictionBeam] = {}
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            pid = str(obj["id"])
            programs = tuple(parse_program(s) for s in obj["programs"])
        except Exception as e:
            raise FormatError(f"bad beam record: {e}", source=str(path), index=i) from None
        beams[pid] = PredictionBeam(pid, programs)
    return beams


def save_beams(beams: Iterable[PredictionBeam], dest: str | Path) -> None:
    lines = [
        json.dumps({"id": b.problem_id,
                    "programs": [serialize_program(p) for p in b.programs]})
        for b in beams
    ]
    Path(dest).write_text("\n".join(lines) + "\n", encoding="utf-8")
