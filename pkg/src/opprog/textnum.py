"""Number extraction from problem text and multiple-choice option strings.

A left-to-right scan picks up integers, decimals, comma-grouped integers
("8,000"), simple fractions ("3/5") and percents ("25%"). Spelled-out numbers
are not extracted. Percents keep their surface magnitude (25, flagged), since
programs divide by const_100 explicitly. A digit run glued to letters
("110m") still yields its number.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

_NUM_RE = re.compile(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+\.\d+|\.\d+|\d+")
_FRAC_SEP_RE = re.compile(r"[ \t]*/[ \t]*")
_PERCENT_RE = re.compile(r"[ \t]?%")
_OPTION_LABEL_RE = re.compile(r"\s*([a-eA-E])\s*[\)\].:]")

OPTION_LABELS = "abcde"


@dataclass(frozen=True)
class NumberMention:
    value: float
    start: int
    end: int
    surface: str
    percent: bool = False
    fraction: bool = False


@dataclass(frozen=True)
class OptionValue:
    label: str
    value: float | None
    surface: str
    percent: bool = False
    fraction: bool = False


def _token_value(token: str) -> float:
    return float(token.replace(",", ""))


def extract_numbers(text: str) -> list[NumberMention]:
    """Ordered numeric mentions; spans are non-overlapping and increasing."""
    mentions: list[NumberMention] = []
    pos = 0
    while True:
        m = _NUM_RE.search(text, pos)
        if not m:
            break
        start, end = m.start(), m.end()
        value = _token_value(m.group())
        fraction = False
        sep = _FRAC_SEP_RE.match(text, end)
        if sep:
            denom_m = _NUM_RE.match(text, sep.end())
            if denom_m:
                denom = _token_value(denom_m.group())
                if denom != 0:
                    value = value / denom
                    end = denom_m.end()
                    fraction = True
                # zero denominator: keep the numerator as a plain mention
        percent = False
        if not fraction:
            pm = _PERCENT_RE.match(text, end)
            if pm:
                percent = True
                if text[end:end + 1] == "%":
                    end = pm.end()
        mentions.append(NumberMention(
            value=value, start=start, end=end, surface=text[start:end],
            percent=percent, fraction=fraction,
        ))
        pos = end
    return mentions


def extract_option_values(options: Sequence[str]) -> list[OptionValue]:
    """First parseable number in each option string; None when absent.

    Labels come from a leading "a )"-style prefix when present, else from
    the option's position.
    """
    out: list[OptionValue] = []
    for idx, surface in enumerate(options):
        m = _OPTION_LABEL_RE.match(surface)
        label = m.group(1).lower() if m else OPTION_LABELS[idx % len(OPTION_LABELS)]
        mentions = extract_numbers(surface)
        if mentions:
            first = mentions[0]
            out.append(OptionValue(label, first.value, surface,
                                   percent=first.percent, fraction=first.fraction))
        else:
            out.append(OptionValue(label, None, surface))
    return out
