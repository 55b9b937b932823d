"""Two-pass masked scoring over a label-token backend.

Pass 1 asks for the math and consistency judgments of a step in one query
(both slots masked, answered together, no cross-influence). Pass 2 re-submits
the same step with those two judgments filled as hard labels and reads the
reward as the positive-token probability at the correctness slot. Every step
costs exactly two backend evaluations.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import ReasoningTrace, StepScore, prefix
from .errors import ProtocolError, UsageError, ValidationError
from .template import (
    DEFAULT_TEMPLATE,
    LABEL_TOKENS,
    NEG,
    POS,
    SLOT_CONSISTENCY,
    SLOT_CORRECTNESS,
    SLOT_MATH,
    SLOTS,
    PromptTemplate,
)

log = logging.getLogger(__name__)

PASS1_SLOTS = (SLOT_MATH, SLOT_CONSISTENCY)
PASS2_SLOTS = (SLOT_CORRECTNESS,)

DISTRIBUTION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class MaskedQuery:
    """One backend query: text segments plus masked and filled label slots.

    segments[0] is the question, segments[-1] the step under evaluation.
    filled is a tuple of (slot, label-token) pairs so the query stays
    hashable; use filled_map for lookups.
    """

    segments: tuple[str, ...]
    mask_slots: tuple[str, ...]
    filled: tuple[tuple[str, str], ...] = ()
    template_version: str = DEFAULT_TEMPLATE.version

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "mask_slots", tuple(self.mask_slots))
        object.__setattr__(self, "filled", tuple(tuple(pair) for pair in self.filled))
        if not self.segments:
            raise ValidationError("query needs at least one segment")
        if not all(isinstance(s, str) for s in self.segments):
            raise ValidationError("segments must be text")
        if not self.mask_slots:
            raise ValidationError("query needs at least one masked slot")
        if len(set(self.mask_slots)) != len(self.mask_slots):
            raise ValidationError(f"duplicate mask slots: {self.mask_slots}")
        filled_map = {}
        for slot, token in self.filled:
            if slot in filled_map:
                raise ValidationError(f"slot {slot!r} filled twice")
            filled_map[slot] = token
        for slot in self.mask_slots:
            if slot not in SLOTS:
                raise ValidationError(f"unknown slot {slot!r}")
            if slot in filled_map:
                raise ValidationError(f"slot {slot!r} both masked and filled")
        for slot, token in filled_map.items():
            if slot not in SLOTS:
                raise ValidationError(f"unknown filled slot {slot!r}")
            if token not in LABEL_TOKENS:
                raise ValidationError(f"filled value for {slot!r} must be POS or NEG, got {token!r}")
        # canonical ordering so equal queries compare equal however they were built
        object.__setattr__(self, "filled", tuple(sorted(filled_map.items())))
        if SLOT_CORRECTNESS in self.mask_slots:
            if SLOT_MATH not in filled_map or SLOT_CONSISTENCY not in filled_map:
                raise ValidationError(
                    "correctness may be masked only once math and consistency are filled"
                )

    @property
    def filled_map(self) -> dict[str, str]:
        return dict(self.filled)

    def to_wire(self) -> dict:
        return {
            "template_version": self.template_version,
            "segments": list(self.segments),
            "mask_slots": list(self.mask_slots),
            "filled": self.filled_map,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "MaskedQuery":
        try:
            return cls(
                segments=tuple(data["segments"]),
                mask_slots=tuple(data["mask_slots"]),
                filled=tuple(sorted(data.get("filled", {}).items())),
                template_version=data["template_version"],
            )
        except KeyError as exc:
            raise ValidationError(f"wire query missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class SlotDistribution:
    """Probability mass over the two label tokens at one masked slot."""

    p_pos: float
    p_neg: float

    def __post_init__(self) -> None:
        for name, value in (("p_pos", self.p_pos), ("p_neg", self.p_neg)):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"{name} must be numeric, got {value!r}")
            if value < 0.0:
                raise ValidationError(f"{name} must be non-negative, got {value!r}")
        if abs(self.p_pos + self.p_neg - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValidationError(
                f"slot distribution must sum to 1 within {DISTRIBUTION_TOLERANCE}: "
                f"p_pos={self.p_pos!r} p_neg={self.p_neg!r}"
            )

    def decode(self, tie_break: str = POS) -> str:
        """Argmax label; exact ties go to tie_break (POS by default)."""
        if tie_break not in LABEL_TOKENS:
            raise UsageError(f"tie_break must be POS or NEG, got {tie_break!r}")
        if self.p_pos > self.p_neg:
            return POS
        if self.p_neg > self.p_pos:
            return NEG
        return tie_break


@dataclass(frozen=True)
class MaskDistribution:
    """Backend reply: one SlotDistribution per masked slot of the query."""

    slots: tuple[tuple[str, SlotDistribution], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.slots]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate slots in distribution: {names}")

    @classmethod
    def of(cls, mapping: dict[str, tuple[float, float] | SlotDistribution]) -> "MaskDistribution":
        pairs = []
        for name, value in mapping.items():
            dist = value if isinstance(value, SlotDistribution) else SlotDistribution(*value)
            pairs.append((name, dist))
        return cls(slots=tuple(pairs))

    def __contains__(self, slot: str) -> bool:
        return any(name == slot for name, _ in self.slots)

    def __getitem__(self, slot: str) -> SlotDistribution:
        for name, dist in self.slots:
            if name == slot:
                return dist
        raise KeyError(slot)

    def require(self, slot: str) -> SlotDistribution:
        try:
            return self[slot]
        except KeyError:
            raise ProtocolError(f"backend reply missing distribution for slot {slot!r}") from None

    def slot_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.slots)


@dataclass(frozen=True)
class BackendCapabilities:
    max_concurrency: int = 1
    max_batch_size: int = 1


class ScorerBackend(ABC):
    """Anything that can answer masked label queries."""

    @property
    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities()

    @abstractmethod
    def evaluate(self, query: MaskedQuery) -> MaskDistribution:
        raise NotImplementedError

    def evaluate_batch(self, queries: Sequence[MaskedQuery]) -> list[MaskDistribution]:
        return [self.evaluate(q) for q in queries]


class CountingBackend(ScorerBackend):
    """Wrapper that counts evaluations; used by protocol audits."""

    def __init__(self, inner: ScorerBackend) -> None:
        self.inner = inner
        self.calls = 0
        self.pass1_calls = 0
        self.pass2_calls = 0

    @property
    def capabilities(self) -> BackendCapabilities:
        return self.inner.capabilities

    def evaluate(self, query: MaskedQuery) -> MaskDistribution:
        self.calls += 1
        if SLOT_CORRECTNESS in query.mask_slots:
            self.pass2_calls += 1
        else:
            self.pass1_calls += 1
        return self.inner.evaluate(query)


@dataclass(frozen=True)
class MockRule:
    """Marker-driven response rule for the deterministic mock oracle.

    Pass-2 correctness p_pos is min(math_p_pos, consistency_p_pos) scaled by
    optimality, which models suboptimal-but-sound steps.
    """

    marker: str
    math_p_pos: float = 0.95
    consistency_p_pos: float = 0.95
    optimality: float = 1.0


DEFAULT_ORACLE_RULES: tuple[MockRule, ...] = (
    MockRule("[ERRMATH]", math_p_pos=0.1),
    MockRule("[ERRCONS]", consistency_p_pos=0.1),
    MockRule("[SUBOPT]", math_p_pos=1.0, consistency_p_pos=1.0, optimality=0.3),
)


class MockOracleBackend(ScorerBackend):
    """Deterministic text-marker oracle for tests and demos.

    The step under evaluation is the last query segment. The first rule whose
    marker occurs in that text wins; conflicting markers are logged. Steps
    without any marker answer default_p_pos on every slot.
    """

    def __init__(
        self,
        rules: Sequence[MockRule] = DEFAULT_ORACLE_RULES,
        *,
        default_p_pos: float = 0.95,
    ) -> None:
        self._rules = tuple(rules)
        self._default = MockRule(marker="", math_p_pos=default_p_pos, consistency_p_pos=default_p_pos)

    @property
    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities(max_concurrency=8, max_batch_size=64)

    def _rule_for(self, step_text: str) -> MockRule:
        hits = [rule for rule in self._rules if rule.marker and rule.marker in step_text]
        if len(hits) > 1:
            log.warning(
                "step matches %d markers (%s); first-match %r wins",
                len(hits),
                [r.marker for r in hits],
                hits[0].marker,
            )
        return hits[0] if hits else self._default

    def evaluate(self, query: MaskedQuery) -> MaskDistribution:
        rule = self._rule_for(query.segments[-1])
        per_slot = {
            SLOT_MATH: rule.math_p_pos,
            SLOT_CONSISTENCY: rule.consistency_p_pos,
            SLOT_CORRECTNESS: min(rule.math_p_pos, rule.consistency_p_pos) * rule.optimality,
        }
        out = {}
        for slot in query.mask_slots:
            p = min(max(per_slot[slot], 0.0), 1.0)
            out[slot] = (p, 1.0 - p)
        return MaskDistribution.of(out)


def mock_oracle_backend(
    rule_table: Sequence[MockRule] | None = None, *, default_p_pos: float = 0.95
) -> ScorerBackend:
    """Factory for the marker-driven mock oracle."""
    return MockOracleBackend(rule_table if rule_table is not None else DEFAULT_ORACLE_RULES,
                             default_p_pos=default_p_pos)


def build_pass1_query(
    question: str,
    prefix_steps: Iterable[str],
    step: str,
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> MaskedQuery:
    """Query with math and consistency masked and nothing filled."""
    if not step or not step.strip():
        raise ValidationError("cannot score an empty step")
    return MaskedQuery(
        segments=(question, *tuple(prefix_steps), step),
        mask_slots=PASS1_SLOTS,
        filled=(),
        template_version=template.version,
    )


def build_pass2_query(pass1_query: MaskedQuery, math_label: str, consistency_label: str) -> MaskedQuery:
    """Same segments with pass-1 outcomes filled and correctness masked."""
    if tuple(pass1_query.mask_slots) != PASS1_SLOTS or pass1_query.filled:
        raise UsageError("build_pass2_query expects an unfilled pass-1 query")
    for name, label in (("math", math_label), ("consistency", consistency_label)):
        if label not in LABEL_TOKENS:
            raise UsageError(f"{name} label must be POS or NEG, got {label!r}")
    return MaskedQuery(
        segments=pass1_query.segments,
        mask_slots=PASS2_SLOTS,
        filled=((SLOT_MATH, math_label), (SLOT_CONSISTENCY, consistency_label)),
        template_version=pass1_query.template_version,
    )


def score_step(
    backend: ScorerBackend,
    question: str,
    prefix_steps: Iterable[str],
    step: str,
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    math_tie_break: str = POS,
    consistency_tie_break: str = POS,
) -> StepScore:
    """Run the two-pass protocol for one step: exactly two backend calls.

    The tie-break hooks only affect exact argmax ties; they exist so protocol
    audits can verify that pass-1 decoding of one slot never leaks into the
    other.
    """
    q1 = build_pass1_query(question, prefix_steps, step, template=template)
    d1 = backend.evaluate(q1)
    math_label = d1.require(SLOT_MATH).decode(math_tie_break)
    consistency_label = d1.require(SLOT_CONSISTENCY).decode(consistency_tie_break)
    q2 = build_pass2_query(q1, math_label, consistency_label)
    d2 = backend.evaluate(q2)
    reward = d2.require(SLOT_CORRECTNESS).p_pos
    return StepScore(
        math_label=1 if math_label == POS else 0,
        consistency_label=1 if consistency_label == POS else 0,
        reward=reward,
    )


def score_trace(
    backend: ScorerBackend,
    trace: ReasoningTrace,
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    math_tie_break: str = POS,
    consistency_tie_break: str = POS,
) -> list[StepScore]:
    """Score every step of a trace independently, in order.

    No label feedback flows between steps: each step sees only the raw prior
    step texts. Failures are re-raised with step_index attached.
    """
    if not trace.steps:
        raise ValidationError(f"trace {trace.source_id!r} has no steps to score")
    scores: list[StepScore] = []
    for t in range(1, len(trace.steps) + 1):
        try:
            scores.append(
                score_step(
                    backend,
                    trace.question,
                    prefix(trace, t),
                    trace.steps[t - 1],
                    template=template,
                    math_tie_break=math_tie_break,
                    consistency_tie_break=consistency_tie_break,
                )
            )
        except Exception as exc:
            exc.step_index = t  # type: ignore[attr-defined]
            raise
    return scores
