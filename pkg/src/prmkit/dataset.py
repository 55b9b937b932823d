"""Three-dimensional label corpus construction from two gold sources.

Source one carries human step labels in {-1, 0, 1}: 1 maps to (1,1,1), 0 maps
to (1,1,0), and -1 is sent to a grading model whose verdict is kept only when
it confirms a defect. Source two carries Monte-Carlo '+'/'-' outcomes: a
judged subset is kept only when the verdict agrees with the sign. Everything
is deterministic: stable sort order, seeded sampling, canonical serialization.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .core import (
    GoldKind,
    GoldSourceLabel,
    ReasoningTrace,
    StepLabelVector,
    prefix,
    validate_label_vector,
)
from .errors import ParseError, UsageError, ValidationError
from . import jsonl

log = logging.getLogger(__name__)


class Provenance(str, Enum):
    """How a labeled record earned its label vector."""

    HUMAN_MAPPED = "human_mapped"
    JUDGE_LABELED = "judge_labeled"
    MC_FILTERED = "mc_filtered"


class _NeedsJudge:
    """Sentinel: the gold label alone cannot decide; a verdict is required."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "NEEDS_JUDGE"


NEEDS_JUDGE = _NeedsJudge()


@dataclass(frozen=True)
class Rejected:
    """Filter outcome: the record is dropped, naming the violated rule."""

    rule: str


@dataclass(frozen=True)
class RawStepRecord:
    """One unlabeled step as ingested from a source stream."""

    trace_ref: str
    step_index: int
    step_text: str
    gold: GoldSourceLabel

    def __post_init__(self) -> None:
        if not self.trace_ref:
            raise ValidationError("trace_ref must be non-empty")
        if not isinstance(self.step_index, int) or isinstance(self.step_index, bool) or self.step_index < 1:
            raise ValidationError(
                f"trace {self.trace_ref!r}: step_index must be an integer >= 1, got {self.step_index!r}"
            )
        if not self.step_text or not self.step_text.strip():
            raise ValidationError(f"trace {self.trace_ref!r} step {self.step_index}: empty step_text")

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_ref": self.trace_ref,
            "step_index": self.step_index,
            "step_text": self.step_text,
            "gold": self.gold.to_dict(),
        }


@dataclass(frozen=True)
class JudgeVerdict:
    """Parsed grading-model output: three binary scores plus free reasoning.

    score_a judges the step's own mathematical logic, score_b its consistency
    with the context, score_c its simplicity/optimality.
    """

    score_a: int
    score_b: int
    score_c: int
    reasoning: str = ""

    def __post_init__(self) -> None:
        for name in ("score_a", "score_b", "score_c"):
            value = getattr(self, name)
            if value not in (0, 1) or isinstance(value, bool):
                raise ValidationError(f"{name} must be 0 or 1, got {value!r}")

    def as_label_vector(self) -> StepLabelVector:
        return StepLabelVector(self.score_a, self.score_b, self.score_c)


@dataclass(frozen=True)
class LabeledStepRecord:
    """One corpus record: step text, its label vector, and where it came from."""

    trace_ref: str
    step_index: int
    step_text: str
    labels: StepLabelVector
    provenance: Provenance
    gold: GoldSourceLabel

    def __post_init__(self) -> None:
        triple = self.labels.as_tuple()
        if self.provenance is Provenance.HUMAN_MAPPED and triple not in ((1, 1, 1), (1, 1, 0)):
            raise ValidationError(
                f"{self.trace_ref}#{self.step_index}: human-mapped labels must be "
                f"(1,1,1) or (1,1,0), got {triple}"
            )
        if self.provenance is Provenance.JUDGE_LABELED:
            if self.gold.kind is not GoldKind.PRM800K or self.gold.prm800k_label != -1:
                raise ValidationError(
                    f"{self.trace_ref}#{self.step_index}: judge-labeled records require gold -1"
                )
            if triple == (1, 1, 1):
                raise ValidationError(
                    f"{self.trace_ref}#{self.step_index}: judge-labeled records must keep a defect"
                )
        if self.provenance is Provenance.MC_FILTERED:
            if self.gold.kind is not GoldKind.MISTRAL_MC:
                raise ValidationError(
                    f"{self.trace_ref}#{self.step_index}: mc-filtered records require mc gold"
                )
            if self.gold.mc_label == "+" and triple != (1, 1, 1):
                raise ValidationError(
                    f"{self.trace_ref}#{self.step_index}: '+' records must be (1,1,1), got {triple}"
                )
            if self.gold.mc_label == "-" and triple == (1, 1, 1):
                raise ValidationError(
                    f"{self.trace_ref}#{self.step_index}: '-' records must keep a defect"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_ref": self.trace_ref,
            "step_index": self.step_index,
            "step_text": self.step_text,
            "gold": self.gold.to_dict(),
            "labels": self.labels.to_dict(),
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LabeledStepRecord":
        try:
            return cls(
                trace_ref=data["trace_ref"],
                step_index=data["step_index"],
                step_text=data["step_text"],
                labels=StepLabelVector.from_dict(data["labels"]),
                provenance=Provenance(data["provenance"]),
                gold=GoldSourceLabel.from_dict(data["gold"]),
            )
        except KeyError as exc:
            raise ValidationError(f"labeled record missing field {exc.args[0]!r}") from exc


def map_prm800k(l: int) -> StepLabelVector | _NeedsJudge:
    """Deterministic part of the source-one mapping; -1 defers to a judge."""
    if l == 1:
        return StepLabelVector(1, 1, 1)
    if l == 0:
        return StepLabelVector(1, 1, 0)
    if l == -1:
        return NEEDS_JUDGE
    raise ValidationError(f"prm800k label must be -1, 0 or 1, got {l!r}")


def filter_judged_prm800k(l: int, verdict: JudgeVerdict) -> StepLabelVector | Rejected:
    """Keep a judged -1 step only when the verdict confirms some defect."""
    if l != -1:
        raise UsageError(f"filter_judged_prm800k only applies to label -1, got {l!r}")
    labels = verdict.as_label_vector()
    if labels.as_tuple() == (1, 1, 1):
        return Rejected(rule="prm800k_judged_all_ones")
    return labels


def filter_mc(mc: str, verdict: JudgeVerdict) -> StepLabelVector | Rejected:
    """Keep '+' only on a clean verdict, '-' only on a defective one."""
    if mc not in ("+", "-"):
        raise UsageError(f"mc label must be '+' or '-', got {mc!r}")
    labels = verdict.as_label_vector()
    triple = labels.as_tuple()
    if mc == "+" and triple != (1, 1, 1):
        return Rejected(rule="mc_plus_not_all_ones")
    if mc == "-" and triple == (1, 1, 1):
        return Rejected(rule="mc_minus_all_ones")
    return labels


# Grading prompt sent to the judge model. {context} is replaced verbatim;
# all other braces are literal instructions to the judge.
JUDGE_PROMPT_TEMPLATE = """You are an analytical math instructor grading a student's work. Think step-by-step through your analysis. Below is the math question, the previous steps by the student, and the current step to evaluate.

{context}

Your task is to rigorously examine the current step and determine if it contains ANY mathematical errors. Assign binary scores (0 = wrong, 1 = correct) based on three criteria:

A) Mathematical logic - Is the current step, **on its own**, mathematically valid? Check for:
- Calculation errors
- Incorrect formula application
- Invalid operations or simplifications
- Algebra mistakes or sign errors
- Incorrect assertions

B) Consistency - Is the current step logically consistent with:
- Established ground truth
- Previous steps
- Any constraints or conditions established earlier
- The mathematical domain applicable to this problem

C) Simplicity and optimality - is this step an efficient next step toward the solution? Check for:
- Redundant statements: factually correct statements that do not help progress toward the solution.
- Circular logic: does this step come to a conclusion already previously established?
- Non-clarity: Are the assertions made in this step ambiguous in a way that obsfucates their purpose?
- Optimality: is the **idea** of this step the near optimal approach one would take to solve the problem?

Double check all listed criterion here explicitly in your reasoning. In your analysis, be sensitive to subtle issues like missing pre-requisites/assumptions, correct-looking statements with slight errors and high confidence statements containing errors.

IMPORTANT POINTS:

- If you find ANY error, even a minor one, you MUST assign a score of 0 to the appropriate criteria. Be skeptical and verify all claims thoroughly.

- For incorrect steps, wherever possible, attempt to categorize the issue as violating **one of the three criterion** (i.e., assign score 0 to **only one category**). Assign multiple 0 scores only for serious errors.

You must format your answer as below:

Reasoning:
{{Provide detailed analysis, showing all verification steps and explicitly identifying any errors found}}

Final answers:
Score A:
{{0 or 1 only}}
Score B:
{{0 or 1 only}}
Score C:
{{0 or 1 only}}"""


def emit_judge_prompt(trace: ReasoningTrace, t: int) -> str:
    """Grading prompt for step t of a trace, context sections labeled."""
    prior = prefix(trace, t)
    if prior:
        prior_block = "\n".join(f"Step {i}: {text}" for i, text in enumerate(prior, start=1))
    else:
        prior_block = "(none)"
    context = (
        f"Math question:\n{trace.question}\n\n"
        f"Previous steps:\n{prior_block}\n\n"
        f"Current step (step {t}):\n{trace.steps[t - 1]}"
    )
    return JUDGE_PROMPT_TEMPLATE.replace("{context}", context)


_SCORE_PATTERNS = (
    ("score_a", re.compile(r"Score\s+A\s*:")),
    ("score_b", re.compile(r"Score\s+B\s*:")),
    ("score_c", re.compile(r"Score\s+C\s*:")),
)
_FINAL_ANSWERS_MARKER = "Final answers:"


def parse_judge_response(text: str) -> JudgeVerdict:
    """Extract the three scores from a judge reply.

    Uses the last occurrence of each score block so chain-of-thought that
    mentions scores earlier does not confuse parsing. The value is the first
    token after the block label and must be exactly 0 or 1.
    """
    scores: dict[str, int] = {}
    for name, pattern in _SCORE_PATTERNS:
        matches = list(pattern.finditer(text))
        if not matches:
            raise ParseError(name, "no score block found in judge response")
        tail = text[matches[-1].end():]
        tokens = tail.split()
        if not tokens:
            raise ParseError(name, "score block is empty")
        if tokens[0] not in ("0", "1"):
            raise ParseError(name, f"expected 0 or 1, got {tokens[0]!r}")
        scores[name] = int(tokens[0])
    marker_at = text.rfind(_FINAL_ANSWERS_MARKER)
    reasoning = text[:marker_at].strip() if marker_at >= 0 else ""
    return JudgeVerdict(reasoning=reasoning, **scores)


def prompt_id_for(trace_ref: str, step_index: int) -> str:
    return f"{trace_ref}#{step_index}"


class VerdictStore:
    """Lookup of judge verdicts keyed by (trace_ref, step_index).

    Unparseable responses are kept as failures rather than raising: the
    builder treats them like missing verdicts and lists them in the sidecar.
    """

    def __init__(self) -> None:
        self._verdicts: dict[tuple[str, int], JudgeVerdict] = {}
        self._failures: dict[tuple[str, int], str] = {}

    def put(self, trace_ref: str, step_index: int, verdict: JudgeVerdict) -> None:
        self._verdicts[(trace_ref, step_index)] = verdict

    def get(self, trace_ref: str, step_index: int) -> JudgeVerdict | None:
        return self._verdicts.get((trace_ref, step_index))

    def failure(self, trace_ref: str, step_index: int) -> str | None:
        return self._failures.get((trace_ref, step_index))

    def items(self) -> list[tuple[tuple[str, int], JudgeVerdict]]:
        return sorted(self._verdicts.items())

    def __len__(self) -> int:
        return len(self._verdicts)

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[str, int], JudgeVerdict]) -> "VerdictStore":
        store = cls()
        for (ref, idx), verdict in mapping.items():
            store.put(ref, idx, verdict)
        return store

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "VerdictStore":
        store = cls()
        for record in jsonl.read_records(path):
            pid = record.get("prompt_id")
            if not isinstance(pid, str) or "#" not in pid:
                raise ValidationError(f"verdict record needs 'prompt_id' like 'trace#3': {record!r}")
            trace_ref, _, idx_text = pid.rpartition("#")
            try:
                step_index = int(idx_text)
            except ValueError as exc:
                raise ValidationError(f"bad step index in prompt_id {pid!r}") from exc
            response = record.get("response")
            if not isinstance(response, str):
                raise ValidationError(f"verdict record {pid!r} needs a text 'response'")
            try:
                store.put(trace_ref, step_index, parse_judge_response(response))
            except ParseError as exc:
                store._failures[(trace_ref, step_index)] = str(exc)
        return store


@dataclass
class SourceStats:
    total: int = 0
    kept: int = 0
    rejected: int = 0
    unresolved: int = 0
    by_rule: dict[str, int] = field(default_factory=dict)

    def bump(self, rule: str) -> None:
        self.by_rule[rule] = self.by_rule.get(rule, 0) + 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "kept": self.kept,
            "rejected": self.rejected,
            "unresolved": self.unresolved,
            "by_rule": dict(sorted(self.by_rule.items())),
        }


@dataclass
class BuildStats:
    """Per-source accounting; kept + rejected + unresolved always equals total."""

    prm800k: SourceStats = field(default_factory=SourceStats)
    mistral: SourceStats = field(default_factory=SourceStats)

    def source(self, kind: GoldKind) -> SourceStats:
        return self.prm800k if kind is GoldKind.PRM800K else self.mistral

    def to_dict(self) -> dict[str, Any]:
        return {
            "prm800k": self.prm800k.to_dict(),
            "mistral": self.mistral.to_dict(),
            "kept": self.prm800k.kept + self.mistral.kept,
            "rejected": self.prm800k.rejected + self.mistral.rejected,
            "unresolved": self.prm800k.unresolved + self.mistral.unresolved,
            "total": self.prm800k.total + self.mistral.total,
        }


@dataclass(frozen=True)
class SidecarEntry:
    """A record excluded from the corpus, with the rule that excluded it."""

    record: RawStepRecord
    status: str  # "rejected" | "unresolved"
    rule: str
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        out = self.record.to_dict()
        out["status"] = self.status
        out["rule"] = self.rule
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class BuildResult:
    kept: list[LabeledStepRecord]
    sidecar: list[SidecarEntry]
    stats: BuildStats


def _record_sort_key(record: RawStepRecord) -> tuple:
    return (record.gold.kind.value, record.trace_ref, record.step_index)


def select_mc_judged(
    mc_records: Sequence[RawStepRecord], sample_rate: float, seed: int
) -> set[tuple[str, int]]:
    """Seeded choice of which MC steps get judged.

    Iterates records in canonical sort order, so the selection depends only on
    record identity, never on input file order. Shared by prompt emission and
    corpus building so the two stages agree.
    """
    if not (0.0 <= sample_rate <= 1.0):
        raise ValidationError(f"sample_rate must be within [0, 1], got {sample_rate!r}")
    rng = random.Random(seed)
    selected: set[tuple[str, int]] = set()
    for record in sorted(mc_records, key=_record_sort_key):
        if rng.random() < sample_rate:
            selected.add((record.trace_ref, record.step_index))
    return selected


def read_raw_records(
    path: str | Path, expected_kind: GoldKind
) -> tuple[list[RawStepRecord], dict[str, ReasoningTrace]]:
    """Ingest a per-step stream; validates contiguity and question agreement.

    Input lines carry trace_ref, question, step_index, step_text and gold.
    Returns records in canonical sort order plus reassembled traces (used for
    prompt emission).
    """
    records: list[RawStepRecord] = []
    questions: dict[str, str] = {}
    steps_by_trace: dict[str, dict[int, str]] = {}
    for line_no, data in enumerate(jsonl.read_records(path), start=1):
        try:
            gold = GoldSourceLabel.from_dict(data["gold"])
            record = RawStepRecord(
                trace_ref=data["trace_ref"],
                step_index=data["step_index"],
                step_text=data["step_text"],
                gold=gold,
            )
            question = data["question"]
        except KeyError as exc:
            raise ValidationError(f"{path}:{line_no}: missing field {exc.args[0]!r}") from exc
        if gold.kind is not expected_kind:
            raise ValidationError(
                f"{path}:{line_no}: expected {expected_kind.value} gold, got {gold.kind.value}"
            )
        if not isinstance(question, str) or not question.strip():
            raise ValidationError(f"{path}:{line_no}: question must be non-empty text")
        prior = questions.setdefault(record.trace_ref, question)
        if prior != question:
            raise ValidationError(
                f"trace {record.trace_ref!r}: conflicting question texts across records"
            )
        per_trace = steps_by_trace.setdefault(record.trace_ref, {})
        if record.step_index in per_trace:
            raise ValidationError(
                f"trace {record.trace_ref!r}: duplicate step_index {record.step_index}"
            )
        per_trace[record.step_index] = record.step_text
        records.append(record)
    traces: dict[str, ReasoningTrace] = {}
    for trace_ref, by_index in steps_by_trace.items():
        indices = sorted(by_index)
        if indices != list(range(1, len(indices) + 1)):
            raise ValidationError(
                f"trace {trace_ref!r}: step_index values must be contiguous from 1, got {indices}"
            )
        traces[trace_ref] = ReasoningTrace(
            question=questions[trace_ref],
            steps=tuple(by_index[i] for i in indices),
            source_id=trace_ref,
        )
    records.sort(key=_record_sort_key)
    return records, traces


def records_needing_verdicts(
    prm800k_records: Sequence[RawStepRecord],
    mc_records: Sequence[RawStepRecord],
    *,
    sample_rate: float = 1.0,
    seed: int = 0,
) -> list[RawStepRecord]:
    """Records a judge must see: every -1 step plus the sampled MC subset."""
    sampled = select_mc_judged(mc_records, sample_rate, seed)
    need = [r for r in prm800k_records if r.gold.prm800k_label == -1]
    need.extend(r for r in mc_records if (r.trace_ref, r.step_index) in sampled)
    return sorted(need, key=_record_sort_key)


def _first_gold_error_index(records: Sequence[RawStepRecord]) -> dict[str, int]:
    """Per trace, the smallest step_index whose gold marks a defect."""
    out: dict[str, int] = {}
    for record in records:
        gold = record.gold
        is_error = (
            gold.prm800k_label == -1
            if gold.kind is GoldKind.PRM800K
            else gold.mc_label == "-"
        )
        if is_error:
            current = out.get(record.trace_ref)
            if current is None or record.step_index < current:
                out[record.trace_ref] = record.step_index
    return out


def label_records(
    prm800k_records: Sequence[RawStepRecord],
    mc_records: Sequence[RawStepRecord],
    verdicts: VerdictStore,
    *,
    sample_rate: float = 1.0,
    seed: int = 0,
    truncate_after_first_error: bool = False,
) -> BuildResult:
    """Apply the mapping/filter rules to both streams; pure in-memory core."""
    for record in prm800k_records:
        if record.gold.kind is not GoldKind.PRM800K:
            raise UsageError(f"{record.trace_ref}#{record.step_index}: not a prm800k record")
    for record in mc_records:
        if record.gold.kind is not GoldKind.MISTRAL_MC:
            raise UsageError(f"{record.trace_ref}#{record.step_index}: not an mc record")

    sampled = select_mc_judged(mc_records, sample_rate, seed)
    kept: list[LabeledStepRecord] = []
    sidecar: list[SidecarEntry] = []
    stats = BuildStats()

    truncate_at: dict[str, int] = {}
    if truncate_after_first_error:
        truncate_at = _first_gold_error_index(list(prm800k_records) + list(mc_records))

    def exclude(record: RawStepRecord, status: str, rule: str, detail: str = "") -> None:
        source = stats.source(record.gold.kind)
        if status == "rejected":
            source.rejected += 1
        else:
            source.unresolved += 1
        source.bump(rule)
        sidecar.append(SidecarEntry(record=record, status=status, rule=rule, detail=detail))

    def keep(record: RawStepRecord, labels: StepLabelVector, provenance: Provenance) -> None:
        stats.source(record.gold.kind).kept += 1
        kept.append(
            LabeledStepRecord(
                trace_ref=record.trace_ref,
                step_index=record.step_index,
                step_text=record.step_text,
                labels=labels,
                provenance=provenance,
                gold=record.gold,
            )
        )

    def lookup_verdict(record: RawStepRecord) -> JudgeVerdict | None:
        verdict = verdicts.get(record.trace_ref, record.step_index)
        if verdict is not None:
            return verdict
        failure = verdicts.failure(record.trace_ref, record.step_index)
        if failure is not None:
            exclude(record, "unresolved", "verdict_unparseable", detail=failure)
        else:
            exclude(record, "unresolved", "verdict_missing")
        return None

    for record in sorted(prm800k_records, key=_record_sort_key):
        stats.prm800k.total += 1
        cutoff = truncate_at.get(record.trace_ref)
        if cutoff is not None and record.step_index > cutoff:
            exclude(record, "rejected", "after_first_error")
            continue
        mapped = map_prm800k(record.gold.prm800k_label)  # type: ignore[arg-type]
        if isinstance(mapped, StepLabelVector):
            keep(record, mapped, Provenance.HUMAN_MAPPED)
            continue
        verdict = lookup_verdict(record)
        if verdict is None:
            continue
        outcome = filter_judged_prm800k(-1, verdict)
        if isinstance(outcome, Rejected):
            exclude(record, "rejected", outcome.rule)
        else:
            keep(record, outcome, Provenance.JUDGE_LABELED)

    for record in sorted(mc_records, key=_record_sort_key):
        stats.mistral.total += 1
        cutoff = truncate_at.get(record.trace_ref)
        if cutoff is not None and record.step_index > cutoff:
            exclude(record, "rejected", "after_first_error")
            continue
        if (record.trace_ref, record.step_index) not in sampled:
            exclude(record, "unresolved", "not_sampled")
            continue
        verdict = lookup_verdict(record)
        if verdict is None:
            continue
        outcome = filter_mc(record.gold.mc_label, verdict)  # type: ignore[arg-type]
        if isinstance(outcome, Rejected):
            exclude(record, "rejected", outcome.rule)
        else:
            keep(record, outcome, Provenance.MC_FILTERED)

    violations = audit_records(kept)
    if violations:
        raise ValidationError(f"post-build audit failed: {violations[:3]}")
    sidecar.sort(key=lambda entry: _record_sort_key(entry.record))
    return BuildResult(kept=kept, sidecar=sidecar, stats=stats)


def audit_records(records: Iterable[LabeledStepRecord]) -> list[str]:
    """Exhaustive admissibility check of labels against gold sources."""
    violations = []
    for record in records:
        if not validate_label_vector(record.labels, record.gold):
            violations.append(
                f"{record.trace_ref}#{record.step_index}: labels {record.labels.as_tuple()} "
                f"inadmissible under gold {record.gold.to_dict()}"
            )
    return violations


def build_corpus(
    prm800k_records: Sequence[RawStepRecord],
    mc_records: Sequence[RawStepRecord],
    verdicts: VerdictStore,
    *,
    out_path: str | Path,
    rejects_path: str | Path,
    sample_rate: float = 1.0,
    seed: int = 0,
    truncate_after_first_error: bool = False,
    meta: dict[str, Any] | None = None,
) -> BuildStats:
    """Label both streams and write the corpus plus the rejects sidecar."""
    result = label_records(
        prm800k_records,
        mc_records,
        verdicts,
        sample_rate=sample_rate,
        seed=seed,
        truncate_after_first_error=truncate_after_first_error,
    )
    jsonl.write_records(out_path, (r.to_dict() for r in result.kept), meta=meta)
    jsonl.write_records(rejects_path, (e.to_dict() for e in result.sidecar), meta=meta)
    log.info(
        "corpus built: kept=%d rejected=%d unresolved=%d",
        result.stats.prm800k.kept + result.stats.mistral.kept,
        result.stats.prm800k.rejected + result.stats.mistral.rejected,
        result.stats.prm800k.unresolved + result.stats.mistral.unresolved,
    )
    return result.stats


def read_corpus(path: str | Path) -> list[LabeledStepRecord]:
    return [LabeledStepRecord.from_dict(data) for data in jsonl.read_records(path)]
