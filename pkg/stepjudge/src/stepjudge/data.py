"""Training data: corpus records in, masked token sequences out.

The corpus file is the labeled-step JSONL the curation tool emits: an initial
{"_meta": ...} line followed by one record per line with trace_ref,
step_index, step_text, labels {math, consistency, correctness}, gold and
provenance. Each record becomes two training samples, one per scoring pass.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import torch

from .errors import CorpusError
from .template import (
    NEG,
    POS,
    PromptLayout,
    SLOT_CONSISTENCY,
    SLOT_CORRECTNESS,
    SLOT_MATH,
)
from .vocab import UNK_TOKEN, LabelTokenMap, Vocab

IGNORE_INDEX = -100

# a generic instruction stands in for the unknown original question; the
# verdicts are functions of the step text alone
TRAINING_QUESTION = "Judge the following reasoning step."


@dataclass(frozen=True)
class CorpusRecord:
    trace_ref: str
    step_index: int
    step_text: str
    math: int
    consistency: int
    correctness: int

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusRecord":
        try:
            labels = data["labels"]
            return cls(
                trace_ref=data["trace_ref"],
                step_index=data["step_index"],
                step_text=data["step_text"],
                math=labels["math"],
                consistency=labels["consistency"],
                correctness=labels["correctness"],
            )
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed corpus record: {data!r}") from exc


def read_corpus(path: str | Path) -> list[CorpusRecord]:
    records: list[CorpusRecord] = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except ValueError as exc:
            raise CorpusError(f"{path}:{line_no}: not JSON: {exc}") from exc
        if "_meta" in data:
            continue
        records.append(CorpusRecord.from_dict(data))
    if not records:
        raise CorpusError(f"corpus {path} holds no records")
    return records


# ------------------------------------------------------------ synthetic corpus

_CLEAN_FRAGMENTS = (
    "Factor the quadratic and keep both roots.",
    "Substitute the known value and simplify the fraction.",
    "Apply the binomial identity to the left side.",
    "Divide both sides by the nonzero coefficient.",
    "Collect like terms and reduce.",
)


def synthesize_corpus(n_records: int, seed: int = 0) -> list[CorpusRecord]:
    """Records whose step text determines the labels.

    [ERRMATH] marks an arithmetic slip, [ERRCONS] a step that ignores its
    context, [SUBOPT] a valid but non-contributing detour; unmarked steps
    are fully correct. Every marked step fails correctness, and a step can
    carry both defect markers at once, so the second serving pass also sees
    both verdicts negative during training.
    """
    rng = random.Random(seed)
    records = []
    for i in range(n_records):
        base = rng.choice(_CLEAN_FRAGMENTS)
        roll = rng.random()
        if roll < 0.4:
            marker, labels = "", (1, 1, 1)
        elif roll < 0.6:
            marker, labels = "[SUBOPT]", (1, 1, 0)
        elif roll < 0.75:
            marker, labels = "[ERRMATH]", (0, 1, 0)
        elif roll < 0.9:
            marker, labels = "[ERRCONS]", (1, 0, 0)
        else:
            marker, labels = "[ERRMATH] [ERRCONS]", (0, 0, 0)
        # the tag is optional so no model can lean on it as a landmark
        suffix = f"(case {i})" if rng.random() < 0.5 else ""
        text = " ".join(part for part in (base, marker, suffix) if part)
        records.append(
            CorpusRecord(
                trace_ref=f"syn-{i // 4}",
                step_index=i % 4 + 1,
                step_text=text,
                math=labels[0],
                consistency=labels[1],
                correctness=labels[2],
            )
        )
    return records


def write_corpus(records: Sequence[CorpusRecord], path: str | Path) -> None:
    """Serialize records in the corpus JSONL schema (with a _meta first line)
    so generated data can round-trip through read_corpus like real data."""
    lines = [json.dumps({"_meta": {"generator": "stepjudge-synthetic"}}, sort_keys=True)]
    for r in records:
        defect_free = (r.math, r.consistency, r.correctness) == (1, 1, 1)
        gold = {"kind": "prm800k", "value": 1 if defect_free else -1}
        provenance = "human_mapped" if defect_free else "judge_labeled"
        lines.append(
            json.dumps(
                {
                    "trace_ref": r.trace_ref,
                    "step_index": r.step_index,
                    "step_text": r.step_text,
                    "labels": {
                        "math": r.math,
                        "consistency": r.consistency,
                        "correctness": r.correctness,
                    },
                    "gold": gold,
                    "provenance": provenance,
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------- sample building


@dataclass(frozen=True)
class TrainingSample:
    """Token ids plus per-position targets, IGNORE_INDEX off the masks."""

    token_ids: tuple[int, ...]
    targets: tuple[int, ...]
    trace_ref: str


def _wire_label(value: int) -> str:
    return POS if value else NEG


def render_pass1(
    layout: PromptLayout,
    record: CorpusRecord,
    prefix: tuple[str, ...] = (),
    question: str = TRAINING_QUESTION,
) -> str:
    return layout.render(
        segments=(question, *prefix, record.step_text),
        mask_slots=(SLOT_MATH, SLOT_CONSISTENCY),
        filled={},
    )


def render_pass2(
    layout: PromptLayout,
    record: CorpusRecord,
    prefix: tuple[str, ...] = (),
    question: str = TRAINING_QUESTION,
) -> str:
    return layout.render(
        segments=(question, *prefix, record.step_text),
        mask_slots=(SLOT_CORRECTNESS,),
        filled={
            SLOT_MATH: _wire_label(record.math),
            SLOT_CONSISTENCY: _wire_label(record.consistency),
        },
    )


# Serving queries carry the trace's prior steps as extra segments, so training
# prompts must too, or every multi-step query lands outside the training
# distribution. The corpus schema has no prefix field; composed fillers stand
# in, marked or not, so the model learns that verdicts follow the current
# step only, wherever a marker shows up earlier.
_PREFIX_MARKERS = ("", "", "", "[ERRMATH]", "[ERRCONS]", "[SUBOPT]", "[ERRMATH] [ERRCONS]")

# The question segment is likewise arbitrary at serve time: it holds the
# problem statement, whose wording must not move any verdict. Training draws
# it from a varied pool, and words in the question and filler segments are
# randomly replaced with the literal unknown-word token, so the <unk>
# embedding gets gradient in exactly the positions where unseen serve-time
# words will land, as a trained do-not-care vector instead of random noise.
_QUESTION_POOL = (
    TRAINING_QUESTION,
    "Is the new step sound given the work so far?",
    "Check the current step for mistakes.",
    "Decide how the latest step should be scored.",
    "What does the expression reduce to after this step?",
    "Find the value of x in the equation below.",
    "Compute the remainder when the total is divided by 9.",
)
_UNK_RATE = 0.15


def _noised(text: str, rng: random.Random) -> str:
    return " ".join(
        UNK_TOKEN if rng.random() < _UNK_RATE else word for word in text.split()
    )


def _filler_step(rng: random.Random) -> str:
    marker = rng.choice(_PREFIX_MARKERS)
    base = rng.choice(_CLEAN_FRAGMENTS)
    return _noised(f"{base} {marker}".strip(), rng)


def render_plan(
    records: Sequence[CorpusRecord],
    layout: PromptLayout,
    seed: int = 42,
    max_prefix: int = 3,
) -> list[tuple[str, tuple[int, ...], str]]:
    """(rendered text, mask labels, trace_ref) for both passes of each record,
    with a seeded question draw and variable-length filler prefix per record."""
    rng = random.Random(seed)
    plan = []
    for record in records:
        question = _noised(rng.choice(_QUESTION_POOL), rng)
        prefix = tuple(_filler_step(rng) for _ in range(rng.randint(0, max_prefix)))
        plan.append(
            (
                render_pass1(layout, record, prefix, question),
                (record.math, record.consistency),
                record.trace_ref,
            )
        )
        plan.append(
            (
                render_pass2(layout, record, prefix, question),
                (record.correctness,),
                record.trace_ref,
            )
        )
    return plan


def _to_sample(
    text: str,
    mask_labels: Sequence[int],
    vocab: Vocab,
    label_map: LabelTokenMap,
    trace_ref: str,
) -> TrainingSample:
    ids = vocab.encode(text)
    mask_positions = [i for i, t in enumerate(ids) if t == label_map.mask_id]
    if len(mask_positions) != len(mask_labels):
        raise CorpusError(
            f"expected {len(mask_labels)} mask tokens in rendered text, found "
            f"{len(mask_positions)}: {text!r}"
        )
    targets = [IGNORE_INDEX] * len(ids)
    for position, label in zip(mask_positions, mask_labels):
        targets[position] = label_map.pos_id if label else label_map.neg_id
    return TrainingSample(token_ids=tuple(ids), targets=tuple(targets), trace_ref=trace_ref)


def samples_from_records(
    records: Iterable[CorpusRecord], layout: PromptLayout, vocab: Vocab, label_map: LabelTokenMap
) -> list[TrainingSample]:
    """Two samples per record: verdict pair first, conditioned correctness
    second. Mask order in pass 1 follows the layout's slot order (math, then
    consistency)."""
    samples = []
    for record in records:
        samples.append(
            _to_sample(
                render_pass1(layout, record),
                (record.math, record.consistency),
                vocab, label_map, record.trace_ref,
            )
        )
        samples.append(
            _to_sample(
                render_pass2(layout, record),
                (record.correctness,),
                vocab, label_map, record.trace_ref,
            )
        )
    return samples


def samples_from_plan(
    plan: Sequence[tuple[str, tuple[int, ...], str]], vocab: Vocab, label_map: LabelTokenMap
) -> list[TrainingSample]:
    return [
        _to_sample(text, labels, vocab, label_map, trace_ref)
        for text, labels, trace_ref in plan
    ]


def split_by_trace(
    records: Sequence[CorpusRecord], holdout_fraction: float = 0.1, seed: int = 42
) -> tuple[list[CorpusRecord], list[CorpusRecord]]:
    """Train/holdout split on whole traces so no trace leaks across sides."""
    refs = sorted({r.trace_ref for r in records})
    rng = random.Random(seed)
    rng.shuffle(refs)
    n_holdout = max(1, int(len(refs) * holdout_fraction))
    holdout_refs = set(refs[:n_holdout])
    train = [r for r in records if r.trace_ref not in holdout_refs]
    holdout = [r for r in records if r.trace_ref in holdout_refs]
    return train, holdout


def collate(
    samples: Sequence[TrainingSample], pad_id: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Right-padded (ids, targets, pad_mask) tensors for one batch."""
    width = max(len(s.token_ids) for s in samples)
    ids = torch.full((len(samples), width), pad_id, dtype=torch.long)
    targets = torch.full((len(samples), width), IGNORE_INDEX, dtype=torch.long)
    pad_mask = torch.ones((len(samples), width), dtype=torch.bool)
    for row, sample in enumerate(samples):
        n = len(sample.token_ids)
        ids[row, :n] = torch.tensor(sample.token_ids, dtype=torch.long)
        targets[row, :n] = torch.tensor(sample.targets, dtype=torch.long)
        pad_mask[row, :n] = False
    return ids, targets, pad_mask
