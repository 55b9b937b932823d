"""Shared domain types for step-level reward modeling.

Value objects only: immutable, validated on construction, no I/O. The
line-delimited serialization of these types (field names included) is part of
the toolkit's file contract, so to_dict/from_dict live next to the types.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

from .errors import ValidationError

_BINARY = (0, 1)


class GoldKind(str, Enum):
    """Origin of a gold step judgment."""

    PRM800K = "prm800k"
    MISTRAL_MC = "mistral_mc"


@dataclass(frozen=True)
class ReasoningTrace:
    """A question plus the ordered solution steps produced for it.

    Step texts must be non-empty after trimming. An empty steps tuple is
    allowed at construction (searches grow traces incrementally) but scoring
    rejects it.
    """

    question: str
    steps: tuple[str, ...]
    final_answer: str | None = None
    source_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not isinstance(self.question, str) or not self.question.strip():
            raise ValidationError(f"trace {self.source_id!r}: question is empty or not text")
        for i, step in enumerate(self.steps, start=1):
            if not isinstance(step, str) or not step.strip():
                raise ValidationError(
                    f"trace {self.source_id!r}: step {i} is empty or not text"
                )

    def __len__(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "question": self.question,
            "steps": list(self.steps),
            "source_id": self.source_id,
        }
        if self.final_answer is not None:
            out["final_answer"] = self.final_answer
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ReasoningTrace":
        try:
            return cls(
                question=data["question"],
                steps=tuple(data["steps"]),
                final_answer=data.get("final_answer"),
                source_id=data.get("source_id", ""),
            )
        except KeyError as exc:
            raise ValidationError(f"trace record missing field {exc.args[0]!r}") from exc


def prefix(trace: ReasoningTrace, t: int) -> tuple[str, ...]:
    """Steps strictly before step t (1-based). t may be 1..len(steps)."""
    if not isinstance(t, int) or isinstance(t, bool):
        raise ValidationError(f"step index must be an integer, got {t!r}")
    if t < 1 or t > len(trace.steps):
        raise IndexError(
            f"step index {t} out of range for trace with {len(trace.steps)} steps"
        )
    return trace.steps[: t - 1]


def _check_binary(name: str, value: Any) -> int:
    if isinstance(value, bool):
        value = int(value)
    if value not in _BINARY:
        raise ValidationError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class StepLabelVector:
    """Three binary judgments for one step: math, consistency, correctness.

    Stored as ints 0/1; 1 means the step passes that criterion.
    """

    math: int
    consistency: int
    correctness: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "math", _check_binary("math", self.math))
        object.__setattr__(self, "consistency", _check_binary("consistency", self.consistency))
        object.__setattr__(self, "correctness", _check_binary("correctness", self.correctness))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.math, self.consistency, self.correctness)

    def to_dict(self) -> dict[str, int]:
        return {"math": self.math, "consistency": self.consistency, "correctness": self.correctness}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StepLabelVector":
        try:
            return cls(data["math"], data["consistency"], data["correctness"])
        except KeyError as exc:
            raise ValidationError(f"label vector missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class StepScore:
    """Scoring outcome for one step: two decoded labels plus a reward."""

    math_label: int
    consistency_label: int
    reward: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "math_label", _check_binary("math_label", self.math_label))
        object.__setattr__(
            self, "consistency_label", _check_binary("consistency_label", self.consistency_label)
        )
        if not (0.0 <= self.reward <= 1.0):
            raise ValidationError(f"reward must be within [0, 1], got {self.reward!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "math_label": self.math_label,
            "consistency_label": self.consistency_label,
            "reward": self.reward,
        }


_PRM800K_DOMAIN = (-1, 0, 1)
_MC_DOMAIN = ("+", "-")


@dataclass(frozen=True)
class GoldSourceLabel:
    """Gold judgment as provided by one of the two supported sources.

    Exactly one of prm800k_label / mc_label is set, matching kind.
    """

    kind: GoldKind
    prm800k_label: int | None = None
    mc_label: str | None = None

    def __post_init__(self) -> None:
        if self.kind is GoldKind.PRM800K:
            if self.mc_label is not None or self.prm800k_label is None:
                raise ValidationError("prm800k gold requires prm800k_label only")
            if self.prm800k_label not in _PRM800K_DOMAIN:
                raise ValidationError(
                    f"prm800k_label must be one of {_PRM800K_DOMAIN}, got {self.prm800k_label!r}"
                )
        elif self.kind is GoldKind.MISTRAL_MC:
            if self.prm800k_label is not None or self.mc_label is None:
                raise ValidationError("mistral_mc gold requires mc_label only")
            if self.mc_label not in _MC_DOMAIN:
                raise ValidationError(f"mc_label must be '+' or '-', got {self.mc_label!r}")
        else:
            raise ValidationError(f"unknown gold kind {self.kind!r}")

    @classmethod
    def prm800k(cls, label: int) -> "GoldSourceLabel":
        return cls(kind=GoldKind.PRM800K, prm800k_label=label)

    @classmethod
    def mistral_mc(cls, sign: str) -> "GoldSourceLabel":
        return cls(kind=GoldKind.MISTRAL_MC, mc_label=sign)

    @property
    def value(self) -> int | str:
        if self.kind is GoldKind.PRM800K:
            return self.prm800k_label  # type: ignore[return-value]
        return self.mc_label  # type: ignore[return-value]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "value": self.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GoldSourceLabel":
        try:
            kind = GoldKind(data["kind"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad gold record: {data!r}") from exc
        value = data.get("value")
        if kind is GoldKind.PRM800K:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(f"prm800k gold value must be an integer, got {value!r}")
            return cls.prm800k(value)
        if not isinstance(value, str):
            raise ValidationError(f"mistral_mc gold value must be '+' or '-', got {value!r}")
        return cls.mistral_mc(value)


def validate_label_vector(c: StepLabelVector, g: GoldSourceLabel) -> bool:
    """True iff label vector c is admissible under gold source g.

    Pure and total over valid inputs; the rule table mirrors the dataset
    builder's mapping/filter decisions.
    """
    triple = c.as_tuple()
    if g.kind is GoldKind.PRM800K:
        if g.prm800k_label == 1:
            return triple == (1, 1, 1)
        if g.prm800k_label == 0:
            return triple == (1, 1, 0)
        return triple != (1, 1, 1)
    if g.mc_label == "+":
        return triple == (1, 1, 1)
    return triple != (1, 1, 1)
