"""Reward-guided step search and its baselines.

The default mode grows one solution greedily: k candidate next steps per
expansion, each scored with the two-pass protocol, highest reward wins with
first-index tie-break. A separate best-of-n mode scores k complete rollouts
and keeps the one whose weakest step is strongest. Voting and pass@k helpers
share the same answer-equivalence predicate.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .answers import answers_equivalent, extract_final_answer
from .core import ReasoningTrace, StepScore
from .errors import PrmkitError, SearchError, ValidationError
from .scorer import ScorerBackend, score_step
from .template import DEFAULT_TEMPLATE, PromptTemplate

log = logging.getLogger(__name__)

MODE_GUIDED = "guided"
MODE_BEST_OF_N = "bestof"


class PolicyBackend(ABC):
    """Proposes candidate next steps for a partial solution."""

    @abstractmethod
    def propose(self, question: str, partial_steps: Sequence[str], n: int, stop: str) -> list[str]:
        """Up to n candidate next steps; fewer is a declared shortfall."""
        raise NotImplementedError


@dataclass(frozen=True)
class SearchConfig:
    k: int = 8
    max_steps: int = 12
    answer_marker: str = "\\boxed{"
    seed: int = 0
    mode: str = MODE_GUIDED

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.answer_marker:
            raise ValidationError("answer_marker must be non-empty")
        if self.mode not in (MODE_GUIDED, MODE_BEST_OF_N):
            raise ValidationError(f"mode must be guided or bestof, got {self.mode!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "max_steps": self.max_steps,
            "answer_marker": self.answer_marker,
            "seed": self.seed,
            "mode": self.mode,
        }


def argmax_first(values: Sequence[float]) -> int:
    """Index of the largest value; ties keep the earliest index."""
    if not values:
        raise ValidationError("argmax over empty sequence")
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


@dataclass(frozen=True)
class Expansion:
    """One search step: the candidates seen and the choice made."""

    step_index: int
    candidates: tuple[str, ...]
    rewards: tuple[float, ...]
    pass1_labels: tuple[tuple[int, int], ...]
    chosen: int
    terminal: bool

    def __post_init__(self) -> None:
        if len(self.candidates) != len(self.rewards):
            raise ValidationError("candidates and rewards must align")
        if self.chosen != argmax_first(self.rewards):
            raise ValidationError(
                f"expansion {self.step_index}: chosen index {self.chosen} is not the "
                "first-index argmax of rewards"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_index": self.step_index,
            "candidates": list(self.candidates),
            "rewards": list(self.rewards),
            "pass1_labels": [list(pair) for pair in self.pass1_labels],
            "chosen": self.chosen,
            "terminal": self.terminal,
        }


@dataclass
class SearchTranscript:
    """Complete record of one guided search run."""

    question: str
    expansions: list[Expansion] = field(default_factory=list)
    final_steps: tuple[str, ...] = ()
    final_answer: str | None = None
    complete: bool = False
    config: SearchConfig = field(default_factory=SearchConfig)

    def final_trace(self) -> ReasoningTrace | None:
        if not self.final_steps:
            return None
        return ReasoningTrace(
            question=self.question, steps=self.final_steps, final_answer=self.final_answer
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "question": self.question,
            "expansions": [e.to_dict() for e in self.expansions],
            "final_steps": list(self.final_steps),
            "final_answer": self.final_answer,
            "complete": self.complete,
            "config": self.config.to_dict(),
        }


def guided_greedy_search(
    policy: PolicyBackend,
    scorer_backend: ScorerBackend,
    question: str,
    config: SearchConfig = SearchConfig(),
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> SearchTranscript:
    """Grow one solution, extending the highest-reward candidate each step.

    Raises SearchError (with the partial transcript attached) when the policy
    returns nothing or the scorer fails. Exhausting max_steps without hitting
    the answer marker returns an incomplete transcript.
    """
    transcript = SearchTranscript(question=question, config=config)
    steps: list[str] = []
    for step_index in range(1, config.max_steps + 1):
        candidates = list(policy.propose(question, tuple(steps), config.k, config.answer_marker))
        if not candidates:
            raise SearchError(
                f"policy returned no candidates at step {step_index}",
                partial_transcript=transcript,
            )
        if len(candidates) < config.k:
            log.info("step %d: policy shortfall, %d of %d candidates", step_index, len(candidates), config.k)
        try:
            scores = [
                score_step(scorer_backend, question, steps, candidate, template=template)
                for candidate in candidates
            ]
        except PrmkitError as exc:
            raise SearchError(
                f"scorer failed at step {step_index}: {exc}", partial_transcript=transcript
            ) from exc
        rewards = tuple(score.reward for score in scores)
        chosen = argmax_first(rewards)
        terminal = config.answer_marker in candidates[chosen]
        transcript.expansions.append(
            Expansion(
                step_index=step_index,
                candidates=tuple(candidates),
                rewards=rewards,
                pass1_labels=tuple((s.math_label, s.consistency_label) for s in scores),
                chosen=chosen,
                terminal=terminal,
            )
        )
        steps.append(candidates[chosen])
        if terminal:
            transcript.final_steps = tuple(steps)
            transcript.final_answer = extract_final_answer(candidates[chosen])
            transcript.complete = True
            return transcript
    transcript.final_steps = tuple(steps)
    transcript.complete = False
    log.info("search exhausted max_steps=%d without terminal step", config.max_steps)
    return transcript


@dataclass
class Rollout:
    """One unguided solution: fixed candidate lane through every expansion."""

    steps: tuple[str, ...]
    final_answer: str | None
    complete: bool
    step_scores: list[StepScore] = field(default_factory=list)

    @property
    def min_reward(self) -> float:
        return min((s.reward for s in self.step_scores), default=0.0)


def unguided_rollouts(
    policy: PolicyBackend, question: str, config: SearchConfig, n_rollouts: int
) -> list[Rollout]:
    """n unguided solutions; rollout j follows candidate lane j each step."""
    rollouts: list[Rollout] = []
    for lane in range(n_rollouts):
        steps: list[str] = []
        final_answer: str | None = None
        complete = False
        for step_index in range(1, config.max_steps + 1):
            candidates = policy.propose(question, tuple(steps), config.k, config.answer_marker)
            if not candidates:
                raise SearchError(f"policy returned no candidates at step {step_index}")
            chosen = candidates[lane % len(candidates)]
            steps.append(chosen)
            if config.answer_marker in chosen:
                final_answer = extract_final_answer(chosen)
                complete = True
                break
        rollouts.append(Rollout(steps=tuple(steps), final_answer=final_answer, complete=complete))
    return rollouts


@dataclass
class BestOfNResult:
    rollouts: list[Rollout]
    chosen: int
    final_answer: str | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "chosen": self.chosen,
            "final_answer": self.final_answer,
            "rollout_min_rewards": [r.min_reward for r in self.rollouts],
            "rollout_answers": [r.final_answer for r in self.rollouts],
        }


def best_of_n_search(
    policy: PolicyBackend,
    scorer_backend: ScorerBackend,
    question: str,
    config: SearchConfig = SearchConfig(),
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> BestOfNResult:
    """Rerank k complete rollouts by their weakest step reward."""
    rollouts = unguided_rollouts(policy, question, config, config.k)
    for rollout in rollouts:
        trace = ReasoningTrace(question=question, steps=rollout.steps)
        prefix_steps: list[str] = []
        for step in trace.steps:
            rollout.step_scores.append(
                score_step(scorer_backend, question, prefix_steps, step, template=template)
            )
            prefix_steps.append(step)
    chosen = argmax_first([r.min_reward for r in rollouts])
    return BestOfNResult(rollouts=rollouts, chosen=chosen, final_answer=rollouts[chosen].final_answer)


Equivalence = Callable[[str | None, str | None], bool]


def majority_vote(
    answers: Sequence[str | None], eq: Equivalence = answers_equivalent
) -> str | None:
    """Representative of the largest equivalence class, earliest class on ties.

    Answers that are None (incomplete solutions) never join a class.
    """
    if not answers:
        raise ValidationError("majority_vote needs at least one answer")
    classes: list[tuple[str, int]] = []  # (representative, count) in first-seen order
    for answer in answers:
        if answer is None:
            continue
        for i, (representative, count) in enumerate(classes):
            if eq(representative, answer):
                classes[i] = (representative, count + 1)
                break
        else:
            classes.append((answer, 1))
    if not classes:
        return None
    best = 0
    for i in range(1, len(classes)):
        if classes[i][1] > classes[best][1]:
            best = i
    return classes[best][0]


def pass_at_k(
    answer_sets: Sequence[Sequence[str | None]],
    golds: Sequence[str],
    eq: Equivalence = answers_equivalent,
) -> float:
    """Fraction of problems where any of the k answers matches gold."""
    if len(answer_sets) != len(golds):
        raise ValidationError(f"{len(answer_sets)} answer sets but {len(golds)} golds")
    if not answer_sets:
        raise ValidationError("pass_at_k needs at least one problem")
    hits = 0
    for answers, gold in zip(answer_sets, golds):
        hits += any(eq(answer, gold) for answer in answers)
    return hits / len(answer_sets)
