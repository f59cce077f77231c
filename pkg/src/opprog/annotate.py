"""Program derivation from rationales.

Two engines live here. ``dp_annotate`` walks the numbers mentioned in a
rationale left to right, keeping a frontier of partial programs whose steps
reproduce those numbers (any number may also be skipped); extracted
``x op y = z`` expressions prune steps that reach z any other way, and only
programs whose final value hits the answer survive. ``enumerate_programs``
is an exhaustive depth-first enumerator over the same argument pools, used
as a brute-force baseline solver and as an independent test oracle for the
frontier search. When a rationale has no numbers at all there is nothing to
guide the frontier, so it deepens freely toward the answer, which makes the
two engines comparable on small instances.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from . import textnum
from .errors import DomainViolation, SearchBudgetExceeded
from .evalkit import MatchConfig
from .program import (
    ArgRef,
    Constant,
    Intermediate,
    OpCall,
    ProblemNumber,
    Program,
    serialize_program,
)
from .registry import ConstTable, OpRegistry

_EXPR_NUM = r"\d[\d,]*(?:\.\d+)?"
_EXPR_RE = re.compile(
    rf"({_EXPR_NUM})\s*([+*/x×÷-])\s*({_EXPR_NUM})\s*=\s*({_EXPR_NUM})"
)
_OPERATOR_ALIASES = {"x": "*", "×": "*", "÷": "/"}
# the canonical registry op implementing each rationale operator
_OPERATOR_OPS = {"+": "add", "-": "subtract", "*": "multiply", "/": "divide"}
_COMMUTATIVE_OPERATORS = {"+", "*"}


@dataclass(frozen=True)
class RationaleExpression:
    lhs: float
    operator: str  # one of + - * /
    rhs: float
    result: float


@dataclass(frozen=True)
class RationaleTrace:
    numbers: tuple[float, ...]
    expressions: tuple[RationaleExpression, ...]


@dataclass(frozen=True)
class SearchConfig:
    max_steps: int = 8
    max_states: int = 200_000
    max_programs: int = 5
    rationale_abs_tol: float = 1e-6
    rationale_rel_tol: float = 1e-4
    answer: MatchConfig = field(default_factory=MatchConfig)
    op_names: tuple[str, ...] | None = None  # restrict the palette when set

    def rationale_matches(self, value: float, target: float) -> bool:
        tol = max(self.rationale_abs_tol, self.rationale_rel_tol * abs(target))
        return abs(value - target) <= tol


@dataclass(frozen=True)
class CandidateProgramSet:
    programs: tuple[Program, ...]
    status: str  # accepted | rejected_too_many | rejected_unreachable

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


def _apply_operator(op: str, a: float, b: float) -> float | None:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        return None
    return a / b


def extract_rationale_trace(rationale: str, config: SearchConfig | None = None) -> RationaleTrace:
    """Numbers in mention order plus the consistent infix expressions.

    An expression whose stated result disagrees with actually applying its
    operator (beyond the rationale tolerance) is dropped; its numbers stay.
    """
    config = config or SearchConfig()
    numbers = tuple(m.value for m in textnum.extract_numbers(rationale))
    expressions: list[RationaleExpression] = []
    for m in _EXPR_RE.finditer(rationale):
        lhs = float(m.group(1).replace(",", ""))
        operator = _OPERATOR_ALIASES.get(m.group(2), m.group(2))
        rhs = float(m.group(3).replace(",", ""))
        result = float(m.group(4).replace(",", ""))
        actual = _apply_operator(operator, lhs, rhs)
        if actual is None or not config.rationale_matches(actual, result):
            continue
        expressions.append(RationaleExpression(lhs, operator, rhs, result))
    return RationaleTrace(numbers, tuple(expressions))


@dataclass(frozen=True)
class _Palette:
    """Prepared op table plus the fixed argument pool (numbers, constants)."""
    ops: tuple
    base_refs: tuple[ArgRef, ...]
    base_values: tuple[float, ...]

    @property
    def n_base(self) -> int:
        return len(self.base_values)


def _prepare(numbers: Sequence[float], registry: OpRegistry,
             consts: ConstTable | None, op_names: Sequence[str] | None) -> _Palette:
    names = list(op_names) if op_names is not None else registry.names
    ops = tuple(registry[n] for n in names)
    base_refs: list[ArgRef] = [ProblemNumber(i) for i in range(len(numbers))]
    base_values: list[float] = [float(v) for v in numbers]
    if consts is not None:
        for cname, cvalue in consts.items():
            base_refs.append(Constant(cname))
            base_values.append(float(cvalue))
    return _Palette(ops, tuple(base_refs), tuple(base_values))


_COMBO_CACHE: dict[tuple[int, bool, int], tuple[tuple[int, ...], ...]] = {}


def _arg_combos(arity: int, commutative: bool, n: int) -> tuple[tuple[int, ...], ...]:
    """Index tuples over an argument pool of size n, in deterministic order.
    Fully commutative ops expand only one canonical (non-decreasing) order."""
    key = (arity, commutative, n)
    cached = _COMBO_CACHE.get(key)
    if cached is not None:
        return cached

    def gen() -> Iterator[tuple[int, ...]]:
        if arity == 1:
            for i in range(n):
                yield (i,)
        elif arity == 2:
            if commutative:
                for i in range(n):
                    for j in range(i, n):
                        yield (i, j)
            else:
                for i in range(n):
                    for j in range(n):
                        yield (i, j)
        else:
            def rec(prefix: tuple[int, ...], start: int):
                if len(prefix) == arity:
                    yield prefix
                    return
                lo = start if commutative else 0
                for i in range(lo, n):
                    yield from rec(prefix + (i,), i if commutative else 0)
            yield from rec((), 0)

    combos = tuple(gen())
    if len(_COMBO_CACHE) < 4096:
        _COMBO_CACHE[key] = combos
    return combos


@dataclass(frozen=True)
class _State:
    calls: tuple[OpCall, ...]
    values: tuple[float, ...]  # one per call

    def key(self) -> str:
        return "|".join(map(str, self.calls))


def _expressions_allow(
    trace: RationaleTrace,
    config: SearchConfig,
    op_name: str,
    arg_values: tuple[float, ...],
    result: float,
) -> bool:
    """A step whose result coincides with an extracted expression's result
    must be that expression: the matching operator applied to its operands."""
    relevant = [e for e in trace.expressions
                if config.rationale_matches(result, e.result)]
    if not relevant:
        return True
    for e in relevant:
        if _OPERATOR_OPS[e.operator] != op_name or len(arg_values) != 2:
            continue
        a, b = arg_values
        ordered = (config.rationale_matches(a, e.lhs)
                   and config.rationale_matches(b, e.rhs))
        swapped = (e.operator in _COMMUTATIVE_OPERATORS
                   and config.rationale_matches(a, e.rhs)
                   and config.rationale_matches(b, e.lhs))
        if ordered or swapped:
            return True
    return False


def _extensions(
    state: _State,
    palette: _Palette,
    trace: RationaleTrace,
    config: SearchConfig,
    target: float | None,
    match_target,
) -> Iterator[_State]:
    """All one-step extensions of a state; when target is set, only steps
    whose value matches it are produced."""
    values = palette.base_values + state.values
    refs = palette.base_refs + tuple(Intermediate(t) for t in range(len(state.values)))
    n = len(values)
    for spec in palette.ops:
        for combo in _arg_combos(spec.arity, spec.commutative, n):
            arg_values = tuple(values[i] for i in combo)
            try:
                result = float(spec.fn(*arg_values))
            except (DomainViolation, OverflowError, ZeroDivisionError, ValueError):
                continue
            if result != result or result in (float("inf"), float("-inf")):
                continue
            if target is not None and not match_target(result, target):
                continue
            if not _expressions_allow(trace, config, spec.name, arg_values, result):
                continue
            call = OpCall(spec.name, tuple(refs[i] for i in combo))
            yield _State(state.calls + (call,), state.values + (result,))


def dp_annotate(
    problem_numbers: Sequence[float],
    trace: RationaleTrace,
    answer: float,
    registry: OpRegistry,
    consts: ConstTable | None,
    config: SearchConfig | None = None,
) -> CandidateProgramSet:
    """Derive candidate programs whose steps reproduce the rationale numbers
    in order (skips allowed) and whose final value reaches the answer.

    Returns at most max_programs distinct programs; more means
    rejected_too_many, none means rejected_unreachable. Raises
    SearchBudgetExceeded if the live frontier outgrows max_states.
    """
    config = config or SearchConfig()
    palette = _prepare(problem_numbers, registry, consts, config.op_names)
    answer_cfg = config.answer
    empty = _State((), ())

    if not trace.numbers:
        survivors = _answer_directed(palette, trace, config, answer)
    else:
        frontier: dict[str, _State] = {empty.key(): empty}
        for r in trace.numbers:
            nxt = dict(frontier)  # every state may skip this rationale number
            for state in frontier.values():
                if len(state.calls) >= config.max_steps:
                    continue
                for ext in _extensions(state, palette, trace, config, r,
                                       config.rationale_matches):
                    nxt.setdefault(ext.key(), ext)
                    if len(nxt) > config.max_states:
                        raise SearchBudgetExceeded(
                            f"live states exceeded {config.max_states}")
            frontier = nxt
        survivors = [s for s in frontier.values()
                     if s.calls and answer_cfg.matches(s.values[-1], answer)]
        if not survivors:
            # the rationale stopped short of the answer: allow one
            # answer-directed step from every live state
            for state in frontier.values():
                if len(state.calls) >= config.max_steps:
                    continue
                for ext in _extensions(state, palette, trace, config, answer,
                                       answer_cfg.matches):
                    survivors.append(ext)
                    if len(survivors) > config.max_states:
                        raise SearchBudgetExceeded(
                            f"live states exceeded {config.max_states}")

    unique: dict[str, Program] = {}
    for s in survivors:
        program = Program(s.calls)
        unique.setdefault(serialize_program(program), program)
    programs = tuple(unique.values())
    if not programs:
        return CandidateProgramSet((), "rejected_unreachable")
    if len(programs) > config.max_programs:
        return CandidateProgramSet(programs, "rejected_too_many")
    return CandidateProgramSet(programs, "accepted")


def _answer_directed(
    palette: _Palette,
    trace: RationaleTrace,
    config: SearchConfig,
    answer: float,
) -> list[_State]:
    """Free frontier deepening used when the rationale names no numbers:
    collect every program of length <= max_steps whose final value reaches
    the answer."""
    frontier = [_State((), ())]
    survivors: list[_State] = []
    for _ in range(config.max_steps):
        new: list[_State] = []
        for state in frontier:
            for ext in _extensions(state, palette, trace, config, None, None):
                new.append(ext)
                if len(new) > config.max_states:
                    raise SearchBudgetExceeded(
                        f"live states exceeded {config.max_states}")
                if config.answer.matches(ext.values[-1], answer):
                    survivors.append(ext)
        frontier = new
    return survivors


def _arg_sort_key(ref: ArgRef):
    if isinstance(ref, ProblemNumber):
        return (0, ref.index, "")
    if isinstance(ref, Constant):
        return (1, 0, ref.name)
    if isinstance(ref, Intermediate):
        return (2, ref.step, "")
    return (3, ref.value, "")


def canonical_arg_order(program: Program, registry: OpRegistry) -> Program:
    """Sort the arguments of fully commutative operations into the pool order
    used by the search engines (problem numbers, constants, intermediates),
    so structurally equal programs serialize identically."""
    calls = []
    for call in program.calls:
        spec = registry.get(call.op)
        if spec is not None and spec.commutative:
            calls.append(OpCall(call.op, tuple(sorted(call.args, key=_arg_sort_key))))
        else:
            calls.append(call)
    return Program(tuple(calls))


def enumerate_programs(
    numbers: Sequence[float],
    registry: OpRegistry,
    consts: ConstTable | None,
    max_len: int,
    target: float,
    tol: float,
    *,
    op_names: Sequence[str] | None = None,
    max_nodes: int = 2_000_000,
) -> list[Program]:
    """Exhaustive, deterministic enumeration of all programs of length
    <= max_len whose final value lands within tol of the target.

    Ops expand in registry order and arguments in pool order (problem
    numbers, then constants, then intermediates), so output order is stable.
    Intended as the brute-force baseline solver and as a test oracle; cost is
    exponential in max_len.
    """
    palette = _prepare(numbers, registry, consts, op_names)
    results: list[Program] = []
    if max_len < 1:
        return results  # a program must compute at least one step
    budget = [max_nodes]
    n_base = palette.n_base
    base_refs = palette.base_refs
    values: list[float] = list(palette.base_values)
    trail: list[tuple[str, tuple[int, ...]]] = []
    ops = tuple((s.name, s.arity, s.commutative, s.fn) for s in palette.ops)
    guards = (DomainViolation, OverflowError, ZeroDivisionError, ValueError)
    inf, ninf = float("inf"), float("-inf")

    def materialize() -> Program:
        calls = []
        for name, combo in trail:
            refs = tuple(base_refs[i] if i < n_base else Intermediate(i - n_base)
                         for i in combo)
            calls.append(OpCall(name, refs))
        return Program(tuple(calls))

    def rec(depth: int) -> None:
        n = len(values)
        budget[0] -= sum(len(_arg_combos(arity, comm, n)) for _, arity, comm, _ in ops)
        if budget[0] < 0:
            raise SearchBudgetExceeded(f"enumeration exceeded {max_nodes} nodes")
        deeper = depth + 1 < max_len
        append_v, pop_v = values.append, values.pop
        for name, arity, comm, fn in ops:
            for combo in _arg_combos(arity, comm, n):
                try:
                    value = fn(*[values[i] for i in combo])
                except guards:
                    continue
                if value != value or value == inf or value == ninf:
                    continue
                value = float(value)
                matched = abs(value - target) <= tol
                if matched or deeper:
                    trail.append((name, combo))
                    if matched:
                        results.append(materialize())
                    if deeper:
                        append_v(value)
                        rec(depth + 1)
                        pop_v()
                    trail.pop()

    rec(0)
    return results
