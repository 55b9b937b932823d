"""Benchmark metrics over step rewards.

Two families: first-error localization (exact-match accuracies combined by
harmonic mean) and per-step binary judgment (class F1s averaged onto a 0-100
scale, with per-category and per-axis breakdowns). A step counts as predicted
erroneous when its reward falls below the decision threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .core import ReasoningTrace, StepScore
from .errors import MetricUndefinedError, ValidationError

DEFAULT_TAU = 0.5


class _AllCorrect:
    """Sentinel gold/prediction: no erroneous step anywhere in the trace."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "ALL_CORRECT"

    def __deepcopy__(self, memo):  # keep the singleton unique
        return self


ALL_CORRECT = _AllCorrect()

# Wire encoding of ALL_CORRECT in gold_first_error fields.
ALL_CORRECT_WIRE = -1

# Category tags grouped into reporting axes.
CATEGORY_AXES: dict[str, tuple[str, ...]] = {
    "simplicity": ("NR", "NCL"),
    "soundness": ("ES", "SC", "DC", "CI"),
    "sensitivity": ("PS", "DR", "MS"),
}
KNOWN_TAGS = tuple(tag for tags in CATEGORY_AXES.values() for tag in tags)


def first_error_from_wire(value: int) -> int | _AllCorrect:
    if value == ALL_CORRECT_WIRE:
        return ALL_CORRECT
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(f"gold_first_error must be >= 1 or {ALL_CORRECT_WIRE}, got {value!r}")
    return value


def first_error_to_wire(value: int | _AllCorrect) -> int:
    return ALL_CORRECT_WIRE if isinstance(value, _AllCorrect) else value


@dataclass(frozen=True)
class FirstErrorCase:
    """A trace with the gold index of its first erroneous step."""

    trace: ReasoningTrace
    gold_first_error: int | _AllCorrect

    def __post_init__(self) -> None:
        gold = self.gold_first_error
        if isinstance(gold, _AllCorrect):
            return
        if not isinstance(gold, int) or isinstance(gold, bool) or gold < 1:
            raise ValidationError(f"gold_first_error must be >= 1 or ALL_CORRECT, got {gold!r}")
        if gold > len(self.trace.steps):
            raise ValidationError(
                f"trace {self.trace.source_id!r}: gold_first_error {gold} exceeds "
                f"{len(self.trace.steps)} steps"
            )

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FirstErrorCase":
        trace = ReasoningTrace.from_dict(data)
        try:
            gold = first_error_from_wire(data["gold_first_error"])
        except KeyError as exc:
            raise ValidationError("case record missing field 'gold_first_error'") from exc
        return cls(trace=trace, gold_first_error=gold)


@dataclass(frozen=True)
class StepJudgmentCase:
    """A trace with per-step binary gold labels and one category tag."""

    trace: ReasoningTrace
    step_labels: tuple[int, ...]
    category_tag: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "step_labels", tuple(self.step_labels))
        if len(self.step_labels) != len(self.trace.steps):
            raise ValidationError(
                f"trace {self.trace.source_id!r}: {len(self.step_labels)} labels for "
                f"{len(self.trace.steps)} steps"
            )
        for label in self.step_labels:
            if label not in (0, 1) or isinstance(label, bool):
                raise ValidationError(f"step labels must be 0 or 1, got {label!r}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StepJudgmentCase":
        trace = ReasoningTrace.from_dict(data)
        try:
            labels = tuple(data["labels"])
        except KeyError as exc:
            raise ValidationError("case record missing field 'labels'") from exc
        return cls(trace=trace, step_labels=labels, category_tag=data.get("category_tag", ""))


def _check_tau(tau: float) -> None:
    if not (0.0 < tau < 1.0):
        raise ValidationError(f"tau must lie strictly between 0 and 1, got {tau!r}")


def predict_first_error(scores: Sequence[StepScore], tau: float = DEFAULT_TAU) -> int | _AllCorrect:
    """Smallest 1-based index whose reward drops below tau, else ALL_CORRECT."""
    _check_tau(tau)
    if not scores:
        raise ValidationError("predict_first_error needs at least one step score")
    for i, score in enumerate(scores, start=1):
        if score.reward < tau:
            return i
    return ALL_CORRECT


def predict_step_labels(scores: Sequence[StepScore], tau: float = DEFAULT_TAU) -> list[int]:
    """Per-step binary predictions: 1 when reward clears tau."""
    _check_tau(tau)
    return [1 if score.reward >= tau else 0 for score in scores]


def _matches(gold: int | _AllCorrect, predicted: int | _AllCorrect) -> bool:
    if isinstance(gold, _AllCorrect) or isinstance(predicted, _AllCorrect):
        return isinstance(gold, _AllCorrect) and isinstance(predicted, _AllCorrect)
    return gold == predicted


def processbench_f1(
    cases: Sequence[FirstErrorCase],
    predictions: Sequence[int | _AllCorrect],
) -> dict[str, float]:
    """Harmonic mean of exact-match accuracy on the two case populations.

    acc_error covers cases with a gold first error (prediction must hit the
    exact index); acc_correct covers fully correct cases. Either population
    being empty leaves the metric undefined.
    """
    if len(cases) != len(predictions):
        raise ValidationError(f"{len(cases)} cases but {len(predictions)} predictions")
    error_hits = error_total = correct_hits = correct_total = 0
    for case, predicted in zip(cases, predictions):
        if isinstance(case.gold_first_error, _AllCorrect):
            correct_total += 1
            correct_hits += _matches(case.gold_first_error, predicted)
        else:
            error_total += 1
            error_hits += _matches(case.gold_first_error, predicted)
    if error_total == 0:
        raise MetricUndefinedError("error", "no cases with a gold first error")
    if correct_total == 0:
        raise MetricUndefinedError("correct", "no fully correct cases")
    acc_error = error_hits / error_total
    acc_correct = correct_hits / correct_total
    f1 = 0.0
    if acc_error + acc_correct > 0:
        f1 = 2 * acc_error * acc_correct / (acc_error + acc_correct)
    return {"acc_error": acc_error, "acc_correct": acc_correct, "f1": f1}


def _f1_for_class(
    gold_flat: Sequence[int], pred_flat: Sequence[int], positive: int
) -> float | None:
    """F1 with `positive` as the positive class; None when gold lacks it."""
    if not any(g == positive for g in gold_flat):
        return None
    tp = sum(1 for g, p in zip(gold_flat, pred_flat) if g == positive and p == positive)
    fp = sum(1 for g, p in zip(gold_flat, pred_flat) if g != positive and p == positive)
    fn = sum(1 for g, p in zip(gold_flat, pred_flat) if g == positive and p != positive)
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def prmscore(
    cases: Sequence[StepJudgmentCase],
    step_predictions: Sequence[Sequence[int]],
) -> dict[str, Any]:
    """100 x mean of the two class F1s over all steps pooled.

    The erroneous class treats label 0 as positive, the correct class label 1.
    A class absent from gold leaves its F1 undefined; the score then degrades
    to the defined F1 alone and the result is flagged.
    """
    if len(cases) != len(step_predictions):
        raise ValidationError(f"{len(cases)} cases but {len(step_predictions)} prediction lists")
    gold_flat: list[int] = []
    pred_flat: list[int] = []
    for case, predicted in zip(cases, step_predictions):
        if len(predicted) != len(case.step_labels):
            raise ValidationError(
                f"trace {case.trace.source_id!r}: {len(predicted)} predictions for "
                f"{len(case.step_labels)} steps"
            )
        for p in predicted:
            if p not in (0, 1) or isinstance(p, bool):
                raise ValidationError(f"step predictions must be 0 or 1, got {p!r}")
        gold_flat.extend(case.step_labels)
        pred_flat.extend(predicted)
    if not gold_flat:
        raise MetricUndefinedError("both", "no steps to score")
    f1_error = _f1_for_class(gold_flat, pred_flat, positive=0)
    f1_correct = _f1_for_class(gold_flat, pred_flat, positive=1)
    degraded = f1_error is None or f1_correct is None
    defined = [f1 for f1 in (f1_error, f1_correct) if f1 is not None]
    score = 100.0 * sum(defined) / len(defined)
    return {
        "f1_error_class": f1_error,
        "f1_correct_class": f1_correct,
        "prmscore": score,
        "degraded": degraded,
    }


@dataclass
class RunMeta:
    """Reproducibility metadata stamped into every report."""

    tau: float = DEFAULT_TAU
    backend_id: str = ""
    template_version: str = ""
    seed: int | None = None
    tool_version: str = ""
    config_hash: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "tau": self.tau,
            "backend_id": self.backend_id,
            "template_version": self.template_version,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
        }
        out.update(self.extra)
        return out


@dataclass
class EvalReport:
    """Aggregates plus the per-case outcomes they are recomputable from."""

    benchmark: str
    metrics: dict[str, Any]
    per_case: list[dict[str, Any]]
    run: RunMeta = field(default_factory=RunMeta)
    per_tag: dict[str, dict[str, Any]] | None = None
    axes: dict[str, float] | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "benchmark": self.benchmark,
            "metrics": self.metrics,
            "run": self.run.to_dict(),
            "warnings": list(self.warnings),
            "per_case": self.per_case,
        }
        if self.per_tag is not None:
            out["per_tag"] = self.per_tag
        if self.axes is not None:
            out["axes"] = self.axes
        return out

    def render_table(self) -> str:
        lines = [f"benchmark: {self.benchmark}"]
        width = max(len(k) for k in self.metrics) if self.metrics else 0
        for key in sorted(self.metrics):
            value = self.metrics[key]
            shown = f"{value:.6f}" if isinstance(value, float) else str(value)
            lines.append(f"  {key:<{width}}  {shown}")
        if self.axes:
            lines.append("axes:")
            for axis in sorted(self.axes):
                lines.append(f"  {axis:<12} {self.axes[axis]:.4f}")
        if self.per_tag:
            lines.append("per tag:")
            for tag in sorted(self.per_tag):
                lines.append(f"  {tag:<4} {self.per_tag[tag]['prmscore']:.4f}")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"


def per_category_report(
    cases: Sequence[StepJudgmentCase],
    step_predictions: Sequence[Sequence[int]],
    *,
    run: RunMeta | None = None,
) -> EvalReport:
    """Scores per category tag, axis averages, and the pooled overall score."""
    if len(cases) != len(step_predictions):
        raise ValidationError(f"{len(cases)} cases but {len(step_predictions)} prediction lists")
    for case in cases:
        if case.category_tag not in KNOWN_TAGS:
            raise ValidationError(
                f"trace {case.trace.source_id!r}: unknown category tag {case.category_tag!r} "
                f"(known: {sorted(KNOWN_TAGS)})"
            )
    by_tag: dict[str, list[int]] = {}
    for i, case in enumerate(cases):
        by_tag.setdefault(case.category_tag, []).append(i)

    warnings: list[str] = []
    per_tag: dict[str, dict[str, Any]] = {}
    for tag in sorted(by_tag):
        indices = by_tag[tag]
        result = prmscore([cases[i] for i in indices], [step_predictions[i] for i in indices])
        result["cases"] = len(indices)
        per_tag[tag] = result
        if result["degraded"]:
            warnings.append(f"tag {tag}: one class absent from gold, score degraded")

    axes: dict[str, float] = {}
    for axis, tags in CATEGORY_AXES.items():
        present = [per_tag[tag]["prmscore"] for tag in tags if tag in per_tag]
        if not present:
            warnings.append(f"axis {axis} omitted: no cases for tags {list(tags)}")
            continue
        axes[axis] = sum(present) / len(present)

    overall = prmscore(cases, step_predictions)
    metrics: dict[str, Any] = {
        "prmscore": overall["prmscore"],
        "f1_error_class": overall["f1_error_class"],
        "f1_correct_class": overall["f1_correct_class"],
    }
    if overall["degraded"]:
        warnings.append("overall: one class absent from gold, score degraded")

    per_case = [
        {
            "source_id": case.trace.source_id,
            "category_tag": case.category_tag,
            "gold_labels": list(case.step_labels),
            "predicted_labels": list(step_predictions[i]),
        }
        for i, case in enumerate(cases)
    ]
    return EvalReport(
        benchmark="step_judgment",
        metrics=metrics,
        per_case=per_case,
        run=run or RunMeta(),
        per_tag=per_tag,
        axes=axes,
        warnings=warnings,
    )


def first_error_report(
    cases: Sequence[FirstErrorCase],
    predictions: Sequence[int | _AllCorrect],
    *,
    run: RunMeta | None = None,
) -> EvalReport:
    """Report wrapper for the first-error benchmark."""
    metrics = processbench_f1(cases, predictions)
    per_case = [
        {
            "source_id": case.trace.source_id,
            "gold_first_error": first_error_to_wire(case.gold_first_error),
            "predicted_first_error": first_error_to_wire(predicted),
            "match": _matches(case.gold_first_error, predicted),
        }
        for case, predicted in zip(cases, predictions)
    ]
    return EvalReport(
        benchmark="first_error",
        metrics=dict(metrics),
        per_case=per_case,
        run=run or RunMeta(),
    )
