"""Prompt layout loaded from a shared JSON file.

The scoring client and this server never import each other; the JSON file is
the contract. Its version is the hash of the layout fields, recomputed here on
load so a stale or hand-edited file fails before anything is served.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import RequestError, TemplateError

SLOT_MATH = "math"
SLOT_CONSISTENCY = "consistency"
SLOT_CORRECTNESS = "correctness"

# wire alphabet for filled slots, and the strings they render to
POS = "POS"
NEG = "NEG"
POS_TOKEN = "<+>"
NEG_TOKEN = "<->"
LABEL_DISPLAY = {POS: POS_TOKEN, NEG: NEG_TOKEN}

_LAYOUT_FIELDS = (
    "name",
    "question_prefix",
    "prior_step_prefix",
    "current_step_prefix",
    "separator",
    "slot_labels",
    "slot_separator",
    "slot_assign",
    "mask_marker",
)


@dataclass(frozen=True)
class PromptLayout:
    name: str
    question_prefix: str
    prior_step_prefix: str
    current_step_prefix: str
    separator: str
    slot_labels: tuple[tuple[str, str], ...]
    slot_separator: str
    slot_assign: str
    mask_marker: str

    @property
    def version(self) -> str:
        fields = {key: getattr(self, key) for key in _LAYOUT_FIELDS}
        fields["slot_labels"] = [list(pair) for pair in self.slot_labels]
        canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
        return "pt-" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(slot for slot, _ in self.slot_labels)

    def render(
        self,
        segments: tuple[str, ...],
        mask_slots: tuple[str, ...],
        filled: Mapping[str, str],
    ) -> str:
        """One prompt string: question, prior steps, current step, slot line.

        Slot order follows the layout, so mask positions in the token stream
        appear in a fixed, known order regardless of the request's ordering.
        """
        if len(segments) < 2:
            raise RequestError("a query needs a question segment and a step segment")
        known = set(self.slots)
        for slot in (*mask_slots, *filled):
            if slot not in known:
                raise RequestError(f"unknown slot {slot!r} for template {self.version}")
        for slot, token in filled.items():
            if token not in LABEL_DISPLAY:
                raise RequestError(f"filled value for {slot!r} must be POS or NEG, got {token!r}")
        parts = [self.question_prefix + segments[0]]
        for i, text in enumerate(segments[1:-1], start=1):
            parts.append(self.prior_step_prefix.format(index=i) + text)
        parts.append(self.current_step_prefix + segments[-1])
        bits = []
        for slot, label in self.slot_labels:
            if slot in filled:
                bits.append(label + self.slot_assign + LABEL_DISPLAY[filled[slot]])
            elif slot in mask_slots:
                bits.append(label + self.slot_assign + self.mask_marker)
        parts.append(self.slot_separator.join(bits))
        return self.separator.join(parts)


def load_layout(path: str | Path) -> PromptLayout:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise TemplateError(f"cannot read template file {path}: {exc}") from exc
    except ValueError as exc:
        raise TemplateError(f"template file {path} is not valid JSON: {exc}") from exc
    stored = data.pop("version", None)
    missing = [key for key in _LAYOUT_FIELDS if key not in data]
    if missing:
        raise TemplateError(f"template file {path} is missing fields: {missing}")
    extra = [key for key in data if key not in _LAYOUT_FIELDS]
    if extra:
        raise TemplateError(f"template file {path} carries unknown fields: {extra}")
    data["slot_labels"] = tuple(tuple(pair) for pair in data["slot_labels"])
    layout = PromptLayout(**data)
    if stored is None:
        raise TemplateError(f"template file {path} carries no version")
    if stored != layout.version:
        raise TemplateError(
            f"template file {path} claims {stored} but its fields hash to {layout.version}"
        )
    return layout
