"""Reference validation, literal binding and deterministic execution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, DomainViolation, EvalError, InvalidReference
from .program import ArgRef, Constant, Intermediate, Literal, OpCall, ProblemNumber, Program
from .registry import ConstTable, OpRegistry, default_constants

BIND_EPS = 1e-9  # exact-match tolerance used when rewriting literals


@dataclass(frozen=True)
class EvalTrace:
    step_values: tuple[float, ...]

    @property
    def final(self) -> float:
        return self.step_values[-1]

    def __len__(self) -> int:
        return len(self.step_values)


@dataclass(frozen=True)
class RefViolation:
    kind: str  # forward_reference | index_out_of_range | unknown_op | arity_mismatch | unknown_constant | empty_program
    call_index: int
    arg_index: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[RefViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_refs(
    program: Program,
    n_count: int,
    registry: OpRegistry,
    consts: ConstTable | None = None,
) -> ValidationReport:
    """Collect every reference/arity problem; an empty report means the
    program executes for any number list of length n_count, barring numeric
    domain errors."""
    if consts is None:
        consts = default_constants()
    violations: list[RefViolation] = []
    if not program.calls:
        violations.append(RefViolation("empty_program", 0, None, "program has no calls"))
    for i, call in enumerate(program.calls):
        spec = registry.get(call.op)
        if spec is None:
            violations.append(RefViolation(
                "unknown_op", i, None, f"operation {call.op!r} is not in the registry"))
        elif len(call.args) != spec.arity:
            violations.append(RefViolation(
                "arity_mismatch", i, None,
                f"{call.op} takes {spec.arity} arguments, got {len(call.args)}"))
        for j, arg in enumerate(call.args):
            if isinstance(arg, Intermediate) and arg.step >= i:
                violations.append(RefViolation(
                    "forward_reference", i, j,
                    f"step {i} references #{arg.step}, which is not computed yet"))
            elif isinstance(arg, ProblemNumber) and arg.index >= n_count:
                violations.append(RefViolation(
                    "index_out_of_range", i, j,
                    f"n{arg.index} is out of range for {n_count} problem numbers"))
            elif isinstance(arg, Constant) and arg.name not in consts:
                violations.append(RefViolation(
                    "unknown_constant", i, j, f"constant {arg.name!r} is not defined"))
    return ValidationReport(tuple(violations))


def resolve_arg(
    ref: ArgRef,
    numbers: Sequence[float],
    consts: ConstTable,
    prior: Sequence[float],
) -> float:
    if isinstance(ref, Literal):
        return ref.value
    if isinstance(ref, ProblemNumber):
        if ref.index >= len(numbers):
            raise InvalidReference(
                f"n{ref.index} is out of range for {len(numbers)} problem numbers")
        return float(numbers[ref.index])
    if isinstance(ref, Intermediate):
        if ref.step >= len(prior):
            raise InvalidReference(f"#{ref.step} is not computed yet")
        return prior[ref.step]
    return consts.resolve(ref.name)


def evaluate(
    program: Program,
    numbers: Sequence[float],
    registry: OpRegistry,
    consts: ConstTable | None = None,
) -> EvalTrace:
    """Execute the program over IEEE doubles. Raises DomainError with the
    failing step index on numerically invalid operations; pure and
    deterministic otherwise."""
    if consts is None:
        consts = default_constants()
    if not program.calls:
        raise EvalError("cannot evaluate an empty program")
    values: list[float] = []
    for i, call in enumerate(program.calls):
        spec = registry[call.op]
        if len(call.args) != spec.arity:
            raise EvalError(
                f"step {i}: {call.op} takes {spec.arity} arguments, got {len(call.args)}")
        args = [resolve_arg(a, numbers, consts, values) for a in call.args]
        try:
            value = float(spec.fn(*args))
        except DomainViolation as e:
            raise DomainError(i, str(e)) from None
        except (OverflowError, ZeroDivisionError, ValueError) as e:
            raise DomainError(i, str(e) or e.__class__.__name__) from None
        if not math.isfinite(value):
            raise DomainError(i, "non-finite result")
        values.append(value)
    return EvalTrace(tuple(values))


@dataclass(frozen=True)
class BindWarning:
    call_index: int
    arg_index: int
    value: float


@dataclass(frozen=True)
class BindResult:
    program: Program
    warnings: tuple[BindWarning, ...] = field(default=())


def bind_literals(
    program: Program,
    numbers: Sequence[float],
    consts: ConstTable,
    registry: OpRegistry,
) -> BindResult:
    """Rewrite literal arguments to references.

    Priority per literal: problem number (first unused exact match, then first
    match), then an earlier step's output, then a table constant. Literals that
    match nothing are kept and flagged. Matching is exact to within 1e-9.
    Prior step outputs come from incrementally executing the partially bound
    program, so execution failures propagate as DomainError.
    """
    used: set[int] = set()
    prior: list[float] = []
    new_calls: list[OpCall] = []
    warnings: list[BindWarning] = []
    const_items = consts.items()
    for i, call in enumerate(program.calls):
        new_args: list[ArgRef] = []
        for j, arg in enumerate(call.args):
            if isinstance(arg, ProblemNumber):
                used.add(arg.index)
            if not isinstance(arg, Literal):
                new_args.append(arg)
                continue
            v = arg.value
            hit = None
            for k, num in enumerate(numbers):
                if k not in used and abs(num - v) <= BIND_EPS:
                    hit = k
                    break
            if hit is None:
                for k, num in enumerate(numbers):
                    if abs(num - v) <= BIND_EPS:
                        hit = k
                        break
            if hit is not None:
                used.add(hit)
                new_args.append(ProblemNumber(hit))
                continue
            step = next((t for t, pv in enumerate(prior) if abs(pv - v) <= BIND_EPS), None)
            if step is not None:
                new_args.append(Intermediate(step))
                continue
            cname = next((n for n, cv in const_items if abs(cv - v) <= BIND_EPS), None)
            if cname is not None:
                new_args.append(Constant(cname))
                continue
            warnings.append(BindWarning(i, j, v))
            new_args.append(arg)
        bound_call = OpCall(call.op, tuple(new_args))
        new_calls.append(bound_call)
        spec = registry[call.op]
        argvals = [resolve_arg(a, numbers, consts, prior) for a in bound_call.args]
        try:
            value = float(spec.fn(*argvals))
        except DomainViolation as e:
            raise DomainError(i, str(e)) from None
        except (OverflowError, ZeroDivisionError, ValueError) as e:
            raise DomainError(i, str(e) or e.__class__.__name__) from None
        prior.append(value)
    return BindResult(Program(tuple(new_calls)), tuple(warnings))
