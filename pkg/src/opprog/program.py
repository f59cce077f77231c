"""Core program types and the text grammar.

A program is a sequence of operation calls. Each argument is one of:

* ``n{i}``       the i-th number extracted from the problem text (0-based)
* ``#{k}``       the output of the k-th earlier call (0-based)
* ``const_...``  a named constant
* a decimal literal such as ``85`` or ``0.2778``

Canonical form joins calls with ``|`` and arguments with ``,`` and carries no
spaces: ``divide(10,20)|multiply(#0,const_2)|add(20,#1)``. The parser also
tolerates ``;``, ``,`` and whitespace between calls and an optional trailing
separator.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import ProgramSyntaxError, UnknownArgForm


@dataclass(frozen=True)
class ProblemNumber:
    index: int


@dataclass(frozen=True)
class Constant:
    name: str  # full name, including the const_ prefix


@dataclass(frozen=True)
class Intermediate:
    step: int


@dataclass(frozen=True)
class Literal:
    value: float


ArgRef = ProblemNumber | Constant | Intermediate | Literal


@dataclass(frozen=True)
class OpCall:
    op: str
    args: tuple[ArgRef, ...]

    def __str__(self) -> str:
        return f"{self.op}({','.join(format_arg(a) for a in self.args)})"


@dataclass(frozen=True)
class Program:
    calls: tuple[OpCall, ...]

    def __len__(self) -> int:
        return len(self.calls)

    def __iter__(self):
        return iter(self.calls)

    def __str__(self) -> str:
        return serialize_program(self)

    def intermediate_steps(self) -> list[int]:
        """All step indices referenced through Intermediate arguments."""
        return [a.step for c in self.calls for a in c.args if isinstance(a, Intermediate)]

    def shift_intermediates(self, delta: int) -> "Program":
        """Shift every Intermediate reference by delta (1-based data repair)."""
        calls = []
        for c in self.calls:
            args = tuple(
                Intermediate(a.step + delta) if isinstance(a, Intermediate) else a
                for a in c.args
            )
            calls.append(OpCall(c.op, args))
        return Program(tuple(calls))


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_LITERAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_SEPARATORS = set("|;,")


def format_number(value: float) -> str:
    """Shortest stable decimal form; integers drop the trailing .0."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"cannot serialize non-finite literal {value!r}")
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_arg(ref: ArgRef) -> str:
    if isinstance(ref, ProblemNumber):
        return f"n{ref.index}"
    if isinstance(ref, Intermediate):
        return f"#{ref.step}"
    if isinstance(ref, Constant):
        return ref.name
    return format_number(ref.value)


def parse_arg_token(token: str, position: int = 0) -> ArgRef:
    """Classify one argument token into its reference variant."""
    if not token:
        raise ProgramSyntaxError("empty argument", position)
    if token[0] == "#":
        if token[1:].isdigit():
            return Intermediate(int(token[1:]))
        raise UnknownArgForm(f"bad intermediate reference {token!r}", position)
    if token.startswith("const_"):
        return Constant(token)
    if token[0] == "n" and token[1:].isdigit():
        return ProblemNumber(int(token[1:]))
    if _LITERAL_RE.fullmatch(token):
        return Literal(float(token))
    raise UnknownArgForm(f"argument token {token!r} matches no known form", position)


def parse_program(text: str) -> Program:
    """Parse program text into a Program; raises ProgramSyntaxError on bad input."""
    if not text or not text.strip():
        raise ProgramSyntaxError("empty program text", 0)
    calls: list[OpCall] = []
    i, n = 0, len(text)
    while True:
        while i < n and (text[i].isspace() or text[i] in _SEPARATORS):
            i += 1
        if i >= n:
            break
        m = _NAME_RE.match(text, i)
        if not m:
            raise ProgramSyntaxError(f"expected operation name, found {text[i]!r}", i)
        op = m.group()
        i = m.end()
        while i < n and text[i].isspace():
            i += 1
        if i >= n or text[i] != "(":
            raise ProgramSyntaxError(f"expected '(' after {op!r}", i)
        i += 1
        args: list[ArgRef] = []
        while True:
            while i < n and text[i].isspace():
                i += 1
            if i >= n:
                raise ProgramSyntaxError("unclosed argument list", i)
            if text[i] == ")":
                if args:
                    raise ProgramSyntaxError("empty argument", i)
                i += 1
                break
            start = i
            while i < n and text[i] not in ",)":
                i += 1
            if i >= n:
                raise ProgramSyntaxError("unclosed argument list", i)
            token = text[start:i].strip()
            args.append(parse_arg_token(token, start))
            if text[i] == ",":
                i += 1
                continue
            i += 1  # closing paren
            break
        calls.append(OpCall(op, tuple(args)))
    if not calls:
        raise ProgramSyntaxError("no operation calls found", 0)
    return Program(tuple(calls))


def serialize_program(program: Program) -> str:
    """Canonical text form: calls joined by '|', args by ',', no spaces."""
    return "|".join(str(call) for call in program.calls)
