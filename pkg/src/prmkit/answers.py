"""Final-answer extraction and exact equivalence.

Extraction prefers the last boxed span; otherwise the last whitespace token
that reads as a bare number. Comparison is exact rational arithmetic when both
sides parse, plain string equality otherwise. Deliberately no symbolic
algebra: "x+1" and "1+x" are different answers.
"""

from __future__ import annotations

import re
from fractions import Fraction

BOXED_MARKER = "\\boxed"

_PUNCT_STRIP = " \t\n\r.,:;!?()[]'\"$"
_NUMBER_RE = re.compile(r"^[+-]?\d[\d,]*(?:\.\d+)?(?:/\d+)?$")


def extract_boxed(text: str) -> str | None:
    """Content of the last boxed span, brace-balanced; None when absent."""
    start = text.rfind(BOXED_MARKER)
    if start < 0:
        return None
    i = start + len(BOXED_MARKER)
    while i < len(text) and text[i] in " \t":
        i += 1
    if i >= len(text) or text[i] != "{":
        return None
    depth = 0
    for j in range(i, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1 : j]
    return None


def _last_number_token(text: str) -> str | None:
    for token in reversed(text.split()):
        stripped = token.strip(_PUNCT_STRIP)
        if stripped and _NUMBER_RE.match(stripped):
            return stripped
    return None


def extract_final_answer(text: str | None) -> str | None:
    """Answer span of a solution or answer string.

    Boxed content wins; otherwise the last standalone numeric token; otherwise
    the trimmed text itself (opaque answers like "x+1" pass through whole).
    """
    if text is None:
        return None
    boxed = extract_boxed(text)
    if boxed is not None:
        return boxed.strip()
    token = _last_number_token(text)
    if token is not None:
        return token
    trimmed = text.strip()
    return trimmed if trimmed else None


def normalize_answer(answer: str) -> str:
    """Light formatting cleanup before comparison."""
    out = answer.strip().strip("$").strip()
    # thousands separators only inside digit groups
    out = re.sub(r"(?<=\d),(?=\d\d\d\b)", "", out)
    out = " ".join(out.split())
    return out


def _as_fraction(text: str) -> Fraction | None:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


def answers_equivalent(a: str | None, b: str | None) -> bool:
    """Exact equivalence of two answers after extraction and normalization."""
    if a is None or b is None:
        return False
    left = extract_final_answer(a)
    right = extract_final_answer(b)
    if left is None or right is None:
        return False
    left = normalize_answer(left)
    right = normalize_answer(right)
    left_value = _as_fraction(left)
    right_value = _as_fraction(right)
    if left_value is not None and right_value is not None:
        return left_value == right_value
    if (left_value is None) != (right_value is None):
        return False
    return left == right
