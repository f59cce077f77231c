"""Data-driven operation registry and constant table.

Operations are loaded from a JSON document (one record per op: name, arity,
category, rule id, commutative flag, hint). The rule id picks the evaluation
function from the table below, so alternative registries can reuse rules or
rebind arities without code changes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, IO, Iterable

from .categories import Category
from .errors import DomainViolation, FormatError, UnknownConstant, UnknownOperation

DIV_EPS = 1e-12       # |denominator| at or below this counts as zero
INT_EPS = 1e-9        # distance from the nearest integer tolerated by integer ops
FACTORIAL_CAP = 170   # largest n! representable as a double


def _nonzero(x: float, what: str = "denominator") -> float:
    if abs(x) <= DIV_EPS:
        raise DomainViolation(f"{what} is zero")
    return x


def _as_int(x: float, what: str) -> int:
    r = round(x)
    if abs(x - r) > INT_EPS:
        raise DomainViolation(f"{what} must be an integer, got {x!r}")
    return int(r)


def _count_arg(x: float, what: str) -> int:
    n = _as_int(x, what)
    if n < 0:
        raise DomainViolation(f"{what} must be non-negative, got {n}")
    if n > FACTORIAL_CAP:
        raise DomainViolation(f"{what} exceeds the factorial cap of {FACTORIAL_CAP}")
    return n


def _power(a: float, b: float) -> float:
    if a == 0 and b < 0:
        raise DomainViolation("zero raised to a negative power")
    if a < 0 and abs(b - round(b)) > INT_EPS:
        raise DomainViolation("negative base with fractional exponent")
    try:
        return a ** (round(b) if a < 0 else b)
    except OverflowError:
        raise DomainViolation("power overflows") from None


def _sqrt(a: float) -> float:
    if a < 0:
        raise DomainViolation("square root of a negative number")
    return math.sqrt(a)


def _log10(a: float) -> float:
    if a <= 0:
        raise DomainViolation("logarithm of a non-positive number")
    return math.log10(a)


def _factorial(a: float) -> float:
    return float(math.factorial(_count_arg(a, "factorial argument")))


def _choose(n: float, r: float) -> float:
    ni, ri = _count_arg(n, "n"), _count_arg(r, "r")
    if ri > ni:
        raise DomainViolation("r exceeds n in choose")
    return float(math.comb(ni, ri))


def _permutation(n: float, r: float) -> float:
    ni, ri = _count_arg(n, "n"), _count_arg(r, "r")
    if ri > ni:
        raise DomainViolation("r exceeds n in permutation")
    return float(math.perm(ni, ri))


def _gcd(a: float, b: float) -> float:
    return float(math.gcd(abs(_as_int(a, "gcd argument")), abs(_as_int(b, "gcd argument"))))


def _lcm(a: float, b: float) -> float:
    return float(math.lcm(abs(_as_int(a, "lcm argument")), abs(_as_int(b, "lcm argument"))))


RULES: dict[str, Callable[..., float]] = {
    "add": lambda a, b: a + b,
    "subtract": lambda a, b: a - b,
    "multiply": lambda a, b: a * b,
    "divide": lambda a, b: a / _nonzero(b),
    "power": _power,
    "sqrt": _sqrt,
    "log10": _log10,
    "floor": math.floor,
    "ceil": math.ceil,
    "round": lambda a: float(round(a)),
    "abs": abs,
    "negate": lambda a: -a,
    "inverse": lambda a: 1.0 / _nonzero(a, "argument"),
    "max": max,
    "min": min,
    "remainder": lambda a, b: a % _nonzero(b),
    "factorial": _factorial,
    "choose": _choose,
    "permutation": _permutation,
    "complement": lambda p: 1.0 - p,
    "union_prob": lambda p, q, r: p + q - r,
    "percent_of": lambda a, b: a / 100.0 * b,
    "gain_percent": lambda sell, cost: (sell - cost) / _nonzero(cost, "cost price") * 100.0,
    "loss_percent": lambda cost, sell: (cost - sell) / _nonzero(cost, "cost price") * 100.0,
    "markup_price": lambda cost, pct: cost * (1.0 + pct / 100.0),
    "base_price": lambda sell, pct: sell / _nonzero(1.0 + pct / 100.0, "scale factor"),
    "discount_price": lambda price, pct: price * (1.0 - pct / 100.0),
    "simple_interest": lambda p, r, t: p * r * t / 100.0,
    "compound_interest": lambda p, r, t: p * (_power(1.0 + r / 100.0, t) - 1.0),
    "kmh_to_ms": lambda v: v * 0.2778,
    "ms_to_kmh": lambda v: v * 3.6,
    "abs_diff": lambda a, b: abs(a - b),
    "harmonic_pair": lambda a, b: a * b / _nonzero(a + b, "combined rate"),
    "square_area": lambda s: s * s,
    "square_perimeter": lambda s: 4.0 * s,
    "rectangle_area": lambda l, w: l * w,
    "rectangle_perimeter": lambda l, w: 2.0 * (l + w),
    "circle_area": lambda r: math.pi * r * r,
    "circumference": lambda r: 2.0 * math.pi * r,
    "triangle_area": lambda b, h: b * h / 2.0,
    "triangle_perimeter": lambda a, b, c: a + b + c,
    "hypotenuse": lambda a, b: math.hypot(a, b),
    "cube_volume": lambda s: s ** 3,
    "cube_surface": lambda s: 6.0 * s * s,
    "box_volume": lambda l, w, h: l * w * h,
    "box_surface": lambda l, w, h: 2.0 * (l * w + l * h + w * h),
    "cylinder_volume": lambda r, h: math.pi * r * r * h,
    "sphere_volume": lambda r: 4.0 / 3.0 * math.pi * r ** 3,
    "sphere_surface": lambda r: 4.0 * math.pi * r * r,
    "gcd": _gcd,
    "lcm": _lcm,
}

_RULE_ARITY: dict[str, int] = {
    name: fn.__code__.co_argcount if hasattr(fn, "__code__") else 0
    for name, fn in RULES.items()
}
# builtins without __code__
_RULE_ARITY.update({"floor": 1, "ceil": 1, "abs": 1, "max": 2, "min": 2})


@dataclass(frozen=True)
class OpHint:
    formula: str
    args: str
    explanation: str


@dataclass(frozen=True)
class OpSpec:
    name: str
    arity: int
    category: Category
    rule: str
    commutative: bool
    hint: OpHint
    fn: Callable[..., float]

    def apply(self, *values: float) -> float:
        return self.fn(*values)


class OpRegistry:
    """Immutable name -> OpSpec table with a per-category index."""

    def __init__(self, specs: Iterable[OpSpec]):
        self._specs: dict[str, OpSpec] = {}
        self._category_index: dict[Category, list[str]] = {c: [] for c in Category}
        for spec in specs:
            if spec.name in self._specs:
                raise FormatError(f"duplicate operation name {spec.name!r}")
            self._specs[spec.name] = spec
            self._category_index[spec.category].append(spec.name)

    def __len__(self) -> int:
        return len(self._specs)

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def __getitem__(self, name: str) -> OpSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise UnknownOperation(f"operation {name!r} is not in the registry") from None

    def get(self, name: str) -> OpSpec | None:
        return self._specs.get(name)

    @property
    def names(self) -> list[str]:
        return list(self._specs)

    @property
    def specs(self) -> list[OpSpec]:
        return list(self._specs.values())

    def category_index(self) -> dict[Category, list[str]]:
        return {c: list(ns) for c, ns in self._category_index.items() if ns}

    def ops_for(self, category: Category) -> list[str]:
        return list(self._category_index[category])

    def palette(self, category: Category) -> list[str]:
        """Category operations plus the always-available general ones."""
        names = list(self._category_index[category])
        if category != Category.GENERAL:
            names += self._category_index[Category.GENERAL]
        return names

    def subset(self, names: Iterable[str]) -> "OpRegistry":
        return OpRegistry(self[n] for n in names)


class ConstTable:
    """Named constants. Any const_X with decimal X resolves to X regardless
    of table contents; named entries (const_pi, ...) come from the table."""

    def __init__(self, entries: dict[str, float] | None = None):
        self._entries: dict[str, float] = dict(entries or {})

    @staticmethod
    def decimal_value(name: str) -> float | None:
        if not name.startswith("const_"):
            return None
        suffix = name[len("const_"):]
        try:
            return float(suffix)
        except ValueError:
            return None

    def resolve(self, name: str) -> float:
        value = self.decimal_value(name)
        if value is not None:
            return value
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownConstant(f"constant {name!r} is not defined") from None

    def __contains__(self, name: str) -> bool:
        return self.decimal_value(name) is not None or name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def names(self) -> list[str]:
        return list(self._entries)

    def items(self) -> list[tuple[str, float]]:
        return list(self._entries.items())


def _load_json(source: str | Path | IO[str], what: str):
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", what)
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        name = str(path)
    try:
        return json.loads(text), name
    except json.JSONDecodeError as e:
        raise FormatError(f"not valid JSON: {e}", source=name) from None


def load_registry(source: str | Path | IO[str]) -> OpRegistry:
    """Load an operation registry document. Raises FormatError on bad records."""
    doc, name = _load_json(source, "registry")
    if not isinstance(doc, list):
        raise FormatError("registry document must be a JSON list", source=name)
    specs: list[OpSpec] = []
    seen: set[str] = set()
    for i, rec in enumerate(doc):
        try:
            op_name = rec["name"]
            arity = int(rec["arity"])
            category = Category(rec["category"])
            rule = rec.get("rule", op_name)
            hint = OpHint(**rec["hint"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"bad operation record: {e}", source=name, index=i) from None
        if op_name in seen:
            raise FormatError(f"duplicate operation name {op_name!r}", source=name, index=i)
        seen.add(op_name)
        if arity < 1:
            raise FormatError(f"arity must be >= 1, got {arity}", source=name, index=i)
        if rule not in RULES:
            raise FormatError(f"unknown rule id {rule!r}", source=name, index=i)
        if not (hint.formula and hint.args and hint.explanation):
            raise FormatError("hint fields must all be non-empty", source=name, index=i)
        if _RULE_ARITY.get(rule, arity) != arity:
            raise FormatError(
                f"rule {rule!r} takes {_RULE_ARITY[rule]} arguments, record says {arity}",
                source=name, index=i,
            )
        specs.append(OpSpec(
            name=op_name, arity=arity, category=category, rule=rule,
            commutative=bool(rec.get("commutative", False)), hint=hint, fn=RULES[rule],
        ))
    return OpRegistry(specs)


def load_constants(source: str | Path | IO[str]) -> ConstTable:
    """Load a constant table document. Raises FormatError on bad records."""
    doc, name = _load_json(source, "constants")
    if not isinstance(doc, list):
        raise FormatError("constants document must be a JSON list", source=name)
    entries: dict[str, float] = {}
    for i, rec in enumerate(doc):
        try:
            cname = rec["name"]
            value = float(rec["value"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"bad constant record: {e}", source=name, index=i) from None
        if not cname.startswith("const_"):
            raise FormatError(f"constant name must start with const_, got {cname!r}",
                              source=name, index=i)
        if cname in entries:
            raise FormatError(f"duplicate constant name {cname!r}", source=name, index=i)
        decimal = ConstTable.decimal_value(cname)
        if decimal is not None and decimal != value:
            raise FormatError(
                f"{cname!r} must equal its decimal form {decimal!r}, got {value!r}",
                source=name, index=i,
            )
        entries[cname] = value
    return ConstTable(entries)


_DEFAULT_REGISTRY: OpRegistry | None = None
_DEFAULT_CONSTANTS: ConstTable | None = None


def _data_file(name: str):
    return resources.files("opprog").joinpath("data").joinpath(name)


def default_registry() -> OpRegistry:
    global _DEFAULT_REGISTRY
    if _DEFAULT_REGISTRY is None:
        with _data_file("operations.json").open("r", encoding="utf-8") as f:
            _DEFAULT_REGISTRY = load_registry(f)
    return _DEFAULT_REGISTRY


def default_constants() -> ConstTable:
    global _DEFAULT_CONSTANTS
    if _DEFAULT_CONSTANTS is None:
        with _data_file("constants.json").open("r", encoding="utf-8") as f:
            _DEFAULT_CONSTANTS = load_constants(f)
    return _DEFAULT_CONSTANTS
