"""Deterministic synthetic fixtures for pipeline tests and demos.

Traces plant textual markers that the mock oracle understands, so gold labels
and oracle behavior agree by construction. Erroneous traces plant exactly one
marked step, which keeps noise-model analysis exact. The policy here is
adversarial in the benign sense: every expansion offers at least one clean
candidate, so a guided search that trusts the oracle can always stay clean.
"""

from __future__ import annotations

import argparse
import hashlib
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import jsonl
from .core import GoldSourceLabel, ReasoningTrace
from .dataset import JudgeVerdict, RawStepRecord, VerdictStore
from .errors import ValidationError
from .evaluator import ALL_CORRECT, KNOWN_TAGS, FirstErrorCase, StepJudgmentCase, _AllCorrect, first_error_to_wire
from .scorer import MaskDistribution, MaskedQuery, ScorerBackend, SlotDistribution
from .search import PolicyBackend

ERROR_MARKERS = ("[ERRMATH]", "[ERRCONS]", "[SUBOPT]")

_FILLER = (
    "Rewrite the expression and collect the coefficients.",
    "Substitute the known quantity into the relation.",
    "Factor the left side and simplify.",
    "Apply the distributive rule to both terms.",
    "Compare the remaining terms on each side.",
)


def _derived_seed(*parts: Any) -> int:
    """Stable cross-process integer seed from structured parts."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


@dataclass(frozen=True)
class SyntheticCase:
    """One benchmark trace with aligned gold views for both metric families."""

    trace: ReasoningTrace
    gold_first_error: int | _AllCorrect
    step_labels: tuple[int, ...]
    category_tag: str

    def as_first_error_case(self) -> FirstErrorCase:
        return FirstErrorCase(trace=self.trace, gold_first_error=self.gold_first_error)

    def as_step_judgment_case(self) -> StepJudgmentCase:
        return StepJudgmentCase(
            trace=self.trace, step_labels=self.step_labels, category_tag=self.category_tag
        )


def make_benchmark_cases(
    n_traces: int,
    seed: int = 0,
    *,
    min_steps: int = 2,
    max_steps: int = 5,
    error_fraction: float = 0.5,
) -> list[SyntheticCase]:
    """Traces with at most one planted defect each, half erroneous by default."""
    if n_traces < 1:
        raise ValidationError("n_traces must be >= 1")
    if not (1 <= min_steps <= max_steps):
        raise ValidationError("need 1 <= min_steps <= max_steps")
    rng = random.Random(seed)
    cases: list[SyntheticCase] = []
    for i in range(n_traces):
        n_steps = rng.randint(min_steps, max_steps)
        erroneous = rng.random() < error_fraction
        error_at = rng.randint(1, n_steps) if erroneous else None
        marker = rng.choice(ERROR_MARKERS) if erroneous else None
        a, b = rng.randint(2, 60), rng.randint(2, 60)
        steps = []
        for t in range(1, n_steps + 1):
            text = f"{rng.choice(_FILLER)} Here {a} + {b} gives {a + b}."
            if t == error_at:
                text = f"{text} {marker}"
            steps.append(text)
        labels = tuple(0 if t == error_at else 1 for t in range(1, n_steps + 1))
        cases.append(
            SyntheticCase(
                trace=ReasoningTrace(
                    question=f"What does {a} + {b} evaluate to after simplification?",
                    steps=tuple(steps),
                    source_id=f"case-{i:04d}",
                ),
                gold_first_error=error_at if error_at is not None else ALL_CORRECT,
                step_labels=labels,
                category_tag=KNOWN_TAGS[i % len(KNOWN_TAGS)],
            )
        )
    return cases


class LabelFlipBackend(ScorerBackend):
    """Noise wrapper: each returned slot flips its two masses with fixed odds.

    The RNG stream is owned by the instance, so one wrapper gives one noise
    replicate; build a fresh wrapper per replicate.
    """

    def __init__(self, inner: ScorerBackend, flip_rate: float, seed: int = 0) -> None:
        if not (0.0 <= flip_rate <= 1.0):
            raise ValidationError(f"flip_rate must be within [0, 1], got {flip_rate!r}")
        self.inner = inner
        self.flip_rate = flip_rate
        self._rng = random.Random(seed)

    @property
    def capabilities(self):
        return self.inner.capabilities

    def evaluate(self, query: MaskedQuery) -> MaskDistribution:
        clean = self.inner.evaluate(query)
        noisy = {}
        for name, dist in clean.slots:
            if self._rng.random() < self.flip_rate:
                noisy[name] = SlotDistribution(p_pos=dist.p_neg, p_neg=dist.p_pos)
            else:
                noisy[name] = dist
        return MaskDistribution.of(noisy)


@dataclass(frozen=True)
class SyntheticProblem:
    """A search problem whose answer corrupts whenever a bad step is taken."""

    problem_id: str
    question: str
    gold_answer: str
    wrong_answer: str
    steps_required: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem_id": self.problem_id,
            "question": self.question,
            "gold_answer": self.gold_answer,
            "wrong_answer": self.wrong_answer,
            "steps_required": self.steps_required,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SyntheticProblem":
        try:
            return cls(
                problem_id=data["problem_id"],
                question=data["question"],
                gold_answer=data["gold_answer"],
                wrong_answer=data["wrong_answer"],
                steps_required=data["steps_required"],
            )
        except KeyError as exc:
            raise ValidationError(f"synthetic problem missing field {exc.args[0]!r}") from exc


def make_search_problems(
    n_problems: int,
    seed: int = 0,
    *,
    min_steps: int = 2,
    max_steps: int = 4,
) -> list[SyntheticProblem]:
    rng = random.Random(seed)
    problems = []
    for i in range(n_problems):
        a, b = rng.randint(3, 80), rng.randint(3, 80)
        gold = a + b
        problems.append(
            SyntheticProblem(
                problem_id=f"prob-{i:04d}",
                question=f"Problem {i}: reduce the expression ({a} + {b}) to a single value.",
                gold_answer=str(gold),
                wrong_answer=str(gold + rng.randint(1, 9)),
                steps_required=rng.randint(min_steps, max_steps),
            )
        )
    return problems


class SyntheticPolicyBackend(PolicyBackend):
    """Seeded candidate generator over synthetic problems.

    Candidates for a given (problem, step index, n) are identical on every
    call, so guided search and lane rollouts compare the same pool. Each
    candidate is independently erroneous with error_rate; if all n come out
    erroneous one uniformly chosen slot is forced clean. The final required
    step emits boxed answers: the gold answer only when both the prefix and
    the candidate are clean.
    """

    def __init__(
        self,
        problems: Sequence[SyntheticProblem],
        *,
        error_rate: float = 0.5,
        seed: int = 0,
    ) -> None:
        if not (0.0 <= error_rate <= 1.0):
            raise ValidationError(f"error_rate must be within [0, 1], got {error_rate!r}")
        self._by_question = {p.question: p for p in problems}
        self.error_rate = error_rate
        self.seed = seed

    def _problem_for(self, question: str) -> SyntheticProblem:
        try:
            return self._by_question[question]
        except KeyError:
            raise ValidationError(f"unknown synthetic question: {question!r}") from None

    def propose(self, question: str, partial_steps: Sequence[str], n: int, stop: str) -> list[str]:
        problem = self._problem_for(question)
        t = len(partial_steps) + 1
        rng = random.Random(_derived_seed(self.seed, problem.problem_id, t, n))
        erroneous = [rng.random() < self.error_rate for _ in range(n)]
        forced = rng.randrange(n)
        if all(erroneous):
            erroneous[forced] = False
        prefix_clean = not any(m in step for step in partial_steps for m in ERROR_MARKERS)
        terminal = t >= problem.steps_required
        candidates = []
        for j, bad in enumerate(erroneous):
            if terminal:
                answer = problem.gold_answer if (prefix_clean and not bad) else problem.wrong_answer
                text = f"Collecting everything, the answer is \\boxed{{{answer}}}."
            else:
                text = f"Reduction {t}.{j}: combine adjacent terms and simplify."
            if bad:
                text = f"{text} [ERRMATH]"
            candidates.append(text)
        return candidates


def cases_to_first_error_dicts(cases: Sequence[SyntheticCase]) -> list[dict[str, Any]]:
    out = []
    for case in cases:
        record = case.trace.to_dict()
        record["gold_first_error"] = first_error_to_wire(case.gold_first_error)
        out.append(record)
    return out


def cases_to_step_dicts(cases: Sequence[SyntheticCase]) -> list[dict[str, Any]]:
    out = []
    for case in cases:
        record = case.trace.to_dict()
        record["labels"] = list(case.step_labels)
        record["category_tag"] = case.category_tag
        out.append(record)
    return out


def make_raw_streams(
    n_traces: int,
    seed: int = 0,
    *,
    min_steps: int = 2,
    max_steps: int = 4,
    verdict_missing_rate: float = 0.02,
) -> tuple[list[RawStepRecord], list[RawStepRecord], VerdictStore, dict[str, str]]:
    """Synthetic dataset-builder inputs: two raw streams plus a verdict store.

    Roughly half the traces carry human labels (1/0/-1 mix), the rest carry
    Monte-Carlo signs. Verdicts exist for almost every judged record, mostly
    agreeing with the gold sign so most records survive filtering.
    """
    rng = random.Random(seed)
    prm_records: list[RawStepRecord] = []
    mc_records: list[RawStepRecord] = []
    store = VerdictStore()
    questions: dict[str, str] = {}
    defects = ((0, 1, 1), (1, 0, 1), (1, 1, 0), (0, 0, 1))
    for i in range(n_traces):
        is_prm = i % 2 == 0
        trace_ref = f"{'p' if is_prm else 'm'}-{i:05d}"
        questions[trace_ref] = f"Question {i}: simplify the target expression."
        n_steps = rng.randint(min_steps, max_steps)
        for t in range(1, n_steps + 1):
            text = f"{rng.choice(_FILLER)} (trace {i}, step {t})"
            if is_prm:
                gold_value = rng.choice((1, 1, 0, -1, -1))
                record = RawStepRecord(
                    trace_ref=trace_ref,
                    step_index=t,
                    step_text=text,
                    gold=GoldSourceLabel.prm800k(gold_value),
                )
                prm_records.append(record)
                if gold_value == -1 and rng.random() >= verdict_missing_rate:
                    # judges mostly confirm a defect; sometimes they disagree
                    triple = rng.choice(defects) if rng.random() < 0.85 else (1, 1, 1)
                    store.put(trace_ref, t, JudgeVerdict(*triple))
            else:
                sign = "+" if rng.random() < 0.6 else "-"
                record = RawStepRecord(
                    trace_ref=trace_ref,
                    step_index=t,
                    step_text=text,
                    gold=GoldSourceLabel.mistral_mc(sign),
                )
                mc_records.append(record)
                if rng.random() >= verdict_missing_rate:
                    agrees = rng.random() < 0.9
                    if sign == "+":
                        triple = (1, 1, 1) if agrees else rng.choice(defects)
                    else:
                        triple = rng.choice(defects) if agrees else (1, 1, 1)
                    store.put(trace_ref, t, JudgeVerdict(*triple))
    return prm_records, mc_records, store, questions


def raw_stream_dicts(
    records: Sequence[RawStepRecord], questions: dict[str, str]
) -> list[dict[str, Any]]:
    out = []
    for record in records:
        data = record.to_dict()
        data["question"] = questions[record.trace_ref]
        out.append(data)
    return out


def verdict_response(verdict: JudgeVerdict, reasoning: str = "Checked all criteria.") -> str:
    """Well-formed judge reply text that parses back to this verdict."""
    return (
        f"Reasoning:\n{reasoning}\n\nFinal answers:\n"
        f"Score A:\n{verdict.score_a}\nScore B:\n{verdict.score_b}\nScore C:\n{verdict.score_c}"
    )


def verdict_rows(store: VerdictStore) -> list[dict[str, Any]]:
    from .dataset import prompt_id_for

    return [
        {"prompt_id": prompt_id_for(ref, idx), "response": verdict_response(verdict)}
        for (ref, idx), verdict in store.items()
    ]


def write_fixture_files(
    out_dir: str | Path,
    *,
    n_traces: int = 200,
    n_problems: int = 50,
    seed: int = 7,
) -> dict[str, Path]:
    """Write the standard demo fixture set; returns the paths by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cases = make_benchmark_cases(n_traces, seed)
    problems = make_search_problems(n_problems, seed)
    prm, mc, store, questions = make_raw_streams(n_traces, seed)
    paths = {
        "first_error_cases": out / "first_error_cases.jsonl",
        "step_cases": out / "step_cases.jsonl",
        "traces": out / "traces.jsonl",
        "problems": out / "problems.jsonl",
        "prm800k": out / "raw_prm800k.jsonl",
        "mistral": out / "raw_mistral.jsonl",
        "verdicts": out / "verdicts.jsonl",
    }
    jsonl.write_records(paths["first_error_cases"], cases_to_first_error_dicts(cases))
    jsonl.write_records(paths["step_cases"], cases_to_step_dicts(cases))
    jsonl.write_records(paths["traces"], (case.trace.to_dict() for case in cases))
    jsonl.write_records(paths["problems"], (p.to_dict() for p in problems))
    jsonl.write_records(paths["prm800k"], raw_stream_dicts(prm, questions))
    jsonl.write_records(paths["mistral"], raw_stream_dicts(mc, questions))
    jsonl.write_records(paths["verdicts"], verdict_rows(store))
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write synthetic fixture files.")
    parser.add_argument("out_dir")
    parser.add_argument("--traces", type=int, default=200)
    parser.add_argument("--problems", type=int, default=50)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = write_fixture_files(
        args.out_dir, n_traces=args.traces, n_problems=args.problems, seed=args.seed
    )
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
