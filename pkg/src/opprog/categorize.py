"""Lexicon-based domain categorization.

Each category carries a list of 1-3 word n-grams. A problem is scored by
counting, case-insensitively and on word boundaries, how often each
category's n-grams occur in its text; the label is the argmax, with ties
broken by lexicon order and an all-zero score falling back to general.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO

from .categories import Category
from .errors import FormatError

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class CategoryLexicon:
    entries: tuple[tuple[Category, tuple[str, ...]], ...]

    def __post_init__(self):
        seen: set[str] = set()
        for category, ngrams in self.entries:
            for g in ngrams:
                if g != g.lower():
                    raise FormatError(f"lexicon n-gram {g!r} must be lowercase")
                if g in seen:
                    raise FormatError(f"n-gram {g!r} appears under more than one category")
                seen.add(g)

    @property
    def categories(self) -> list[Category]:
        return [c for c, _ in self.entries]

    def with_entry(self, category: Category, ngram: str) -> "CategoryLexicon":
        entries = []
        added = False
        for c, ngrams in self.entries:
            if c == category:
                entries.append((c, ngrams + (ngram,)))
                added = True
            else:
                entries.append((c, ngrams))
        if not added:
            entries.append((category, (ngram,)))
        return CategoryLexicon(tuple(entries))


@dataclass(frozen=True)
class CategoryScore:
    counts: tuple[tuple[Category, int], ...]

    def __getitem__(self, category: Category) -> int:
        for c, n in self.counts:
            if c == category:
                return n
        return 0

    def as_dict(self) -> dict[str, int]:
        return {c.value: n for c, n in self.counts}


def _count_ngram(tokens: list[str], ngram_tokens: tuple[str, ...]) -> int:
    k = len(ngram_tokens)
    if k == 0 or k > len(tokens):
        return 0
    target = list(ngram_tokens)
    return sum(1 for i in range(len(tokens) - k + 1) if tokens[i:i + k] == target)


def score_categories(text: str, lexicon: CategoryLexicon) -> CategoryScore:
    """Count lexicon n-gram occurrences per category. Overlapping occurrences
    of distinct n-grams all count."""
    tokens = _tokens(text)
    counts = []
    for category, ngrams in lexicon.entries:
        total = sum(_count_ngram(tokens, tuple(_tokens(g))) for g in ngrams)
        counts.append((category, total))
    return CategoryScore(tuple(counts))


def classify(text: str, lexicon: CategoryLexicon) -> Category:
    """Argmax category; lexicon order breaks ties; all-zero falls back to
    general."""
    scores = score_categories(text, lexicon)
    best: Category | None = None
    best_count = 0
    for category, count in scores.counts:
        if count > best_count:
            best, best_count = category, count
    return best if best is not None else Category.GENERAL


def load_lexicon(source: str | Path | IO[str]) -> CategoryLexicon:
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "lexicon")
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        name = str(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"not valid JSON: {e}", source=name) from None
    if not isinstance(doc, list):
        raise FormatError("lexicon document must be a JSON list", source=name)
    entries = []
    for i, rec in enumerate(doc):
        try:
            category = Category(rec["category"])
            ngrams = tuple(str(g) for g in rec["ngrams"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"bad lexicon record: {e}", source=name, index=i) from None
        entries.append((category, ngrams))
    return CategoryLexicon(tuple(entries))


_DEFAULT_LEXICON: CategoryLexicon | None = None


def default_lexicon() -> CategoryLexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        f = resources.files("opprog").joinpath("data").joinpath("lexicon.json")
        with f.open("r", encoding="utf-8") as fh:
            _DEFAULT_LEXICON = load_lexicon(fh)
    return _DEFAULT_LEXICON
