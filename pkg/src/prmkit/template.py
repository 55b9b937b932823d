"""Versioned prompt layout shared by scoring clients and model servers.

The layout is fixed data, hashed into a version string that travels with every
wire request so both sides fail fast on drift. Servers load the same layout
from a JSON file (written by to_json_file) rather than importing this package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ValidationError

SLOT_MATH = "math"
SLOT_CONSISTENCY = "consistency"
SLOT_CORRECTNESS = "correctness"
SLOTS = (SLOT_MATH, SLOT_CONSISTENCY, SLOT_CORRECTNESS)

POS = "POS"
NEG = "NEG"
LABEL_TOKENS = (POS, NEG)

# Display strings used only when rendering a query to text; the wire protocol
# itself carries the abstract POS/NEG alphabet.
DISPLAY_LABEL_STRINGS = {POS: "<+>", NEG: "<->"}


@dataclass(frozen=True)
class PromptTemplate:
    """Layout for rendering a masked query into a single prompt string."""

    name: str = "default"
    question_prefix: str = "Question: "
    prior_step_prefix: str = "Step {index}: "
    current_step_prefix: str = "Current step: "
    separator: str = "\n"
    slot_labels: tuple[tuple[str, str], ...] = (
        (SLOT_MATH, "Math"),
        (SLOT_CONSISTENCY, "Consistency"),
        (SLOT_CORRECTNESS, "Correctness"),
    )
    slot_separator: str = ", "
    slot_assign: str = ": "
    mask_marker: str = "<mask>"

    def __post_init__(self) -> None:
        declared = tuple(slot for slot, _ in self.slot_labels)
        if declared != SLOTS:
            raise ValidationError(f"slot_labels must cover {SLOTS} in order, got {declared}")

    def fields_dict(self) -> dict:
        return {
            "name": self.name,
            "question_prefix": self.question_prefix,
            "prior_step_prefix": self.prior_step_prefix,
            "current_step_prefix": self.current_step_prefix,
            "separator": self.separator,
            "slot_labels": [list(pair) for pair in self.slot_labels],
            "slot_separator": self.slot_separator,
            "slot_assign": self.slot_assign,
            "mask_marker": self.mask_marker,
        }

    @property
    def version(self) -> str:
        canonical = json.dumps(self.fields_dict(), sort_keys=True, separators=(",", ":"))
        return "pt-" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def render(
        self,
        segments: tuple[str, ...],
        mask_slots: tuple[str, ...],
        filled: Mapping[str, str],
        label_strings: Mapping[str, str] | None = None,
    ) -> str:
        """Render segments plus the slot line into one prompt string.

        segments[0] is the question, segments[-1] the step under evaluation,
        anything between is a prior step.
        """
        if len(segments) < 2:
            raise ValidationError("render requires a question segment and a step segment")
        known = {slot for slot, _ in self.slot_labels}
        unknown = sorted({s for s in (*mask_slots, *filled) if s not in known})
        if unknown:
            raise ValidationError(f"unknown slots for this template: {unknown}")
        strings = dict(DISPLAY_LABEL_STRINGS)
        if label_strings:
            strings.update(label_strings)
        parts = [self.question_prefix + segments[0]]
        for i, text in enumerate(segments[1:-1], start=1):
            parts.append(self.prior_step_prefix.format(index=i) + text)
        parts.append(self.current_step_prefix + segments[-1])
        bits = []
        for slot, label in self.slot_labels:
            if slot in filled:
                bits.append(label + self.slot_assign + strings[filled[slot]])
            elif slot in mask_slots:
                bits.append(label + self.slot_assign + self.mask_marker)
        parts.append(self.slot_separator.join(bits))
        return self.separator.join(parts)

    def to_json_file(self, path: str | Path) -> None:
        payload = self.fields_dict()
        payload["version"] = self.version
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PromptTemplate":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        stored_version = data.pop("version", None)
        data["slot_labels"] = tuple(tuple(pair) for pair in data.get("slot_labels", ()))
        template = cls(**data)
        if stored_version is not None and stored_version != template.version:
            raise ValidationError(
                f"template file at {path} claims version {stored_version} "
                f"but its fields hash to {template.version}"
            )
        return template


DEFAULT_TEMPLATE = PromptTemplate()
