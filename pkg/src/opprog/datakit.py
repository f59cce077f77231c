"""Dataset I/O, record validation, corpus statistics, duplicate screening
and annotation expansion.

Dataset files are JSON: either a JSON array or one JSON object per line.
Canonical field names are Problem, Rationale, options, correct, category and
program; loading also accepts lowercase aliases, a single comma-joined
options string, and program strings under linear_formula/formula. Programs
written with 1-based intermediate references are detected per record and
normalized to 0-based.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .categories import Category
from .errors import DomainError, EvalError, FormatError, OpProgError, SearchBudgetExceeded
from .evalkit import MatchConfig, match_options
from .evaluator import evaluate, validate_refs
from .program import Program, parse_program, serialize_program
from .registry import ConstTable, OpRegistry
from .textnum import extract_numbers, extract_option_values

OPTION_COUNT = 5
_LABELS = "abcde"
_NUM_TOKEN_RE = re.compile(r"\d")
_OPTION_SPLIT_RE = re.compile(r"\s*,\s*(?=[a-eA-E]\s*[\)\].:])")


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    problem: str
    rationale: str
    options: tuple[str, ...]
    correct: str
    category: Category | None = None
    program: Program | None = None

    def numbers(self) -> list[float]:
        return [m.value for m in extract_numbers(self.problem)]


@dataclass
class LoadReport:
    total: int = 0
    loaded: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)
    one_based_normalized: list[str] = field(default_factory=list)

    def summary(self) -> str:
        parts = [f"{self.loaded}/{self.total} records loaded"]
        if self.skipped:
            parts.append(f"{len(self.skipped)} skipped")
        if self.one_based_normalized:
            parts.append(
                f"{len(self.one_based_normalized)} programs normalized from "
                "1-based intermediate references")
        return ", ".join(parts)


def _split_options(value) -> tuple[str, ...]:
    if isinstance(value, str):
        parts = [p.strip() for p in _OPTION_SPLIT_RE.split(value) if p.strip()]
        return tuple(parts)
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    raise FormatError(f"options must be a list or string, got {type(value).__name__}")


def _normalize_program(
    program: Program,
    n_count: int,
    registry: OpRegistry,
    consts: ConstTable | None,
) -> tuple[Program, bool]:
    """Detect 1-based intermediate references: smallest ref is #1, validation
    fails as-is but passes after shifting every ref down by one."""
    steps = program.intermediate_steps()
    if not steps or min(steps) < 1:
        return program, False
    if validate_refs(program, n_count, registry, consts).ok:
        return program, False
    shifted = program.shift_intermediates(-1)
    if validate_refs(shifted, n_count, registry, consts).ok:
        return shifted, True
    return program, False


def record_from_dict(
    obj: dict,
    index: int,
    registry: OpRegistry | None = None,
    consts: ConstTable | None = None,
) -> tuple[ProblemRecord, bool]:
    """Build one record from a raw mapping; second element reports whether a
    1-based program was normalized. Raises FormatError on malformed input."""
    if not isinstance(obj, dict):
        raise FormatError("record must be a JSON object", index=index)
    problem = obj.get("Problem", obj.get("problem"))
    if not isinstance(problem, str) or not problem:
        raise FormatError("missing problem text", index=index)
    rationale = obj.get("Rationale", obj.get("rationale", "")) or ""
    options = _split_options(obj.get("options", ()))
    if len(options) != OPTION_COUNT:
        raise FormatError(f"expected {OPTION_COUNT} options, got {len(options)}",
                          index=index)
    correct = str(obj.get("correct", "")).strip().lower()
    if correct not in _LABELS:
        raise FormatError(f"correct label must be one of a-e, got {correct!r}",
                          index=index)
    category = None
    if obj.get("category"):
        try:
            category = Category(str(obj["category"]).strip().lower())
        except ValueError:
            raise FormatError(f"unknown category {obj['category']!r}", index=index) from None
    program_text = obj.get("program") or obj.get("linear_formula") or obj.get("formula")
    program = None
    normalized = False
    if program_text:
        try:
            program = parse_program(str(program_text))
        except OpProgError as e:
            raise FormatError(f"bad program: {e}", index=index) from None
        if registry is not None:
            n_count = len(extract_numbers(problem))
            program, normalized = _normalize_program(program, n_count, registry, consts)
    record_id = str(obj.get("id", f"r{index}"))
    return ProblemRecord(
        id=record_id, problem=problem, rationale=str(rationale),
        options=options, correct=correct, category=category, program=program,
    ), normalized


def load_dataset(
    source: str | Path,
    registry: OpRegistry | None = None,
    consts: ConstTable | None = None,
) -> tuple[list[ProblemRecord], LoadReport]:
    """Read a dataset file. Malformed records are skipped and reported, not
    fatal; the report also lists programs normalized from 1-based refs."""
    text = Path(source).read_text(encoding="utf-8")
    stripped = text.lstrip()
    raw: list = []
    report = LoadReport()
    if stripped.startswith("["):
        raw = json.loads(text)
    else:
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                raw.append(json.loads(line))
            except json.JSONDecodeError as e:
                raw.append(FormatError(f"bad JSON line: {e}", index=i))
    records: list[ProblemRecord] = []
    seen_ids: set[str] = set()
    for i, obj in enumerate(raw):
        report.total += 1
        if isinstance(obj, FormatError):
            report.skipped.append((i, str(obj)))
            continue
        try:
            record, normalized = record_from_dict(obj, i, registry, consts)
        except FormatError as e:
            report.skipped.append((i, str(e)))
            continue
        if record.id in seen_ids:
            record = replace(record, id=f"{record.id}_{i}")
        seen_ids.add(record.id)
        records.append(record)
        report.loaded += 1
        if normalized:
            report.one_based_normalized.append(record.id)
    return records, report


def record_to_dict(record: ProblemRecord) -> dict:
    return {
        "id": record.id,
        "Problem": record.problem,
        "Rationale": record.rationale,
        "options": list(record.options),
        "correct": record.correct,
        "category": record.category.value if record.category else None,
        "program": serialize_program(record.program) if record.program else None,
    }


def save_dataset(records: Iterable[ProblemRecord], dest: str | Path) -> None:
    """One JSON object per line, canonical field names; load(save(x)) == x."""
    lines = [json.dumps(record_to_dict(r), ensure_ascii=False) for r in records]
    Path(dest).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


@dataclass(frozen=True)
class RecordVerdict:
    record_id: str
    valid: bool
    reason: str | None = None  # no_program | reference | domain_error | non_numeric_option | value_mismatch
    executed: float | None = None
    expected: float | None = None
    step: int | None = None
    detail: str | None = None
    distances: tuple[tuple[str, float | None], ...] = ()


def validate_record(
    record: ProblemRecord,
    registry: OpRegistry,
    consts: ConstTable | None,
    match_config: MatchConfig,
) -> RecordVerdict:
    """Valid iff the record's program executes on its own problem numbers and
    the final value matches the correct option within tolerance."""
    if record.program is None:
        return RecordVerdict(record.id, False, "no_program")
    numbers = record.numbers()
    report = validate_refs(record.program, len(numbers), registry, consts)
    if not report.ok:
        return RecordVerdict(record.id, False, "reference",
                             detail="; ".join(v.message for v in report.violations))
    try:
        trace = evaluate(record.program, numbers, registry, consts)
    except DomainError as e:
        return RecordVerdict(record.id, False, "domain_error", step=e.step, detail=e.reason)
    except EvalError as e:
        return RecordVerdict(record.id, False, "domain_error", detail=str(e))
    options = extract_option_values(record.options)
    target = next((o for o in options if o.label == record.correct), None)
    if target is None or target.value is None:
        return RecordVerdict(record.id, False, "non_numeric_option",
                             executed=trace.final)
    distances = tuple(
        (o.label, abs(trace.final - o.value) if o.value is not None else None)
        for o in options
    )
    if match_config.matches(trace.final, target.value):
        return RecordVerdict(record.id, True, executed=trace.final,
                             expected=target.value, distances=distances)
    return RecordVerdict(record.id, False, "value_mismatch", executed=trace.final,
                         expected=target.value, distances=distances)


@dataclass(frozen=True)
class CategoryStats:
    count: int
    avg_words: float
    vocab: int
    avg_ops: float
    program_count: int


@dataclass(frozen=True)
class DatasetStats:
    rows: tuple[tuple[str, CategoryStats], ...]
    total: CategoryStats


def compute_stats(records: Sequence[ProblemRecord]) -> DatasetStats:
    """Per-category problem counts, mean whitespace-token problem length,
    distinct lowercased vocabulary, and mean program length."""
    buckets: dict[str, list[ProblemRecord]] = {}
    for r in records:
        key = r.category.value if r.category else "(uncategorized)"
        buckets.setdefault(key, []).append(r)

    def stats_for(rs: Sequence[ProblemRecord]) -> CategoryStats:
        words = [len(r.problem.split()) for r in rs]
        vocab = {tok.lower() for r in rs for tok in r.problem.split()}
        ops = [len(r.program) for r in rs if r.program is not None]
        return CategoryStats(
            count=len(rs),
            avg_words=sum(words) / len(words) if words else 0.0,
            vocab=len(vocab),
            avg_ops=sum(ops) / len(ops) if ops else 0.0,
            program_count=len(ops),
        )

    rows = tuple((name, stats_for(rs)) for name, rs in sorted(buckets.items()))
    return DatasetStats(rows=rows, total=stats_for(records))


def render_stats_table(stats: DatasetStats) -> str:
    header = ("Category", "#Prob.", "Avg #words", "#Vocab", "Avg #ops")
    rows = [header]
    for name, s in list(stats.rows) + [("All", stats.total)]:
        rows.append((name, str(s.count), f"{s.avg_words:.1f}", str(s.vocab),
                     f"{s.avg_ops:.1f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def masked_tokens(text: str) -> list[str]:
    """Lowercased whitespace tokens with every digit-bearing token collapsed
    to a single placeholder, so numeric edits cost nothing."""
    return ["<num>" if _NUM_TOKEN_RE.search(tok) else tok.lower()
            for tok in text.split()]


def word_edit_distance(a: Sequence[str], b: Sequence[str], cap: int | None = None) -> int:
    """Word-level Levenshtein distance; with cap set, returns cap + 1 as soon
    as the true distance provably exceeds it."""
    if len(a) < len(b):
        a, b = b, a
    if cap is not None and len(a) - len(b) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i]
        best = i
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            cur.append(v)
            if v < best:
                best = v
        if cap is not None and best > cap:
            return cap + 1
        prev = cur
    return prev[-1]


def find_near_duplicates(
    records: Sequence[ProblemRecord],
    word_threshold: int = 4,
    max_pairs: int = 5_000_000,
) -> list[list[str]]:
    """Clusters (size >= 2) of record ids whose number-masked texts are
    within word_threshold edits; clusters are connected components. A length
    prefilter skips pairs that cannot be within threshold; the remaining
    pairwise work is capped by max_pairs."""
    tokens = [masked_tokens(r.problem) for r in records]
    order = sorted(range(len(records)), key=lambda i: len(tokens[i]))
    parent = list(range(len(records)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    compared = 0
    for oi in range(len(order)):
        i = order[oi]
        for oj in range(oi + 1, len(order)):
            j = order[oj]
            if len(tokens[j]) - len(tokens[i]) > word_threshold:
                break  # sorted by length: no later candidate can qualify
            compared += 1
            if compared > max_pairs:
                raise SearchBudgetExceeded(
                    f"duplicate scan exceeded {max_pairs} pairs")
            if word_edit_distance(tokens[i], tokens[j], cap=word_threshold) <= word_threshold:
                union(i, j)
    clusters: dict[int, list[int]] = {}
    for i in range(len(records)):
        clusters.setdefault(find(i), []).append(i)
    out = [sorted(members) for members in clusters.values() if len(members) > 1]
    out.sort(key=lambda ms: ms[0])
    return [[records[i].id for i in members] for members in out]


@dataclass
class ExpansionReport:
    attempted: int = 0
    accepted: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    pairs: list[tuple[str, str]] = field(default_factory=list)  # (target, donor)

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1


def expand_annotations(
    annotated: Sequence[ProblemRecord],
    unannotated: Sequence[ProblemRecord],
    registry: OpRegistry,
    consts: ConstTable | None,
    match_config: MatchConfig,
    word_threshold: int = 4,
) -> tuple[list[ProblemRecord], ExpansionReport]:
    """Copy programs onto near-duplicate problems.

    The donor program's problem-number references are rebound positionally
    (n{i} reads the target's i-th number); the result is kept only when it
    executes and matches the target's correct option.
    """
    report = ExpansionReport()
    donors = [(r, masked_tokens(r.problem)) for r in annotated if r.program is not None]
    new_records: list[ProblemRecord] = []
    for target in unannotated:
        if target.program is not None:
            continue
        target_tokens = masked_tokens(target.problem)
        best: tuple[int, ProblemRecord] | None = None
        for donor, donor_tokens in donors:
            if abs(len(donor_tokens) - len(target_tokens)) > word_threshold:
                continue
            d = word_edit_distance(donor_tokens, target_tokens, cap=word_threshold)
            if d <= word_threshold and (best is None or d < best[0]):
                best = (d, donor)
        if best is None:
            continue
        report.attempted += 1
        donor = best[1]
        program = donor.program
        numbers = target.numbers()
        ref_report = validate_refs(program, len(numbers), registry, consts)
        if not ref_report.ok:
            report.reject("index_out_of_range"
                          if "index_out_of_range" in ref_report.kinds() else "reference")
            continue
        try:
            trace = evaluate(program, numbers, registry, consts)
        except EvalError:
            report.reject("domain_error")
            continue
        options = extract_option_values(target.options)
        correct = next((o for o in options if o.label == target.correct), None)
        if correct is None or correct.value is None:
            report.reject("non_numeric_option")
            continue
        if not match_config.matches(trace.final, correct.value):
            report.reject("value_mismatch")
            continue
        report.accepted += 1
        report.pairs.append((target.id, donor.id))
        new_records.append(replace(target, program=program,
                                   category=target.category or donor.category))
    return new_records, report


class SolvabilityLabel:
    NO_WORDS = "no_words"
    NON_NUMERIC_OPTIONS = "non_numeric_options"
    DUPLICATE = "duplicate"
    SOLVABLE = "solvable"
    UNKNOWN = "unknown"


def classify_solvability(
    record: ProblemRecord,
    duplicate_ids: frozenset[str] | set[str] = frozenset(),
) -> str:
    """Deterministic screening labels: a problem with no alphabetic token,
    then options none of which parse to a number, then membership in a
    duplicate cluster; anything else counts as solvable."""
    if not any(ch.isalpha() for ch in record.problem):
        return SolvabilityLabel.NO_WORDS
    options = extract_option_values(record.options)
    if all(o.value is None for o in options):
        return SolvabilityLabel.NON_NUMERIC_OPTIONS
    if record.id in duplicate_ids:
        return SolvabilityLabel.DUPLICATE
    return SolvabilityLabel.SOLVABLE


def match_options_for_record(record: ProblemRecord, value: float,
                             cfg: MatchConfig):
    return match_options(value, extract_option_values(record.options), cfg)
