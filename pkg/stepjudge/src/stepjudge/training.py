"""Masked-slot training loop with cosine schedule and warmup.

The loss is cross-entropy at mask positions only; every other position is
IGNORE_INDEX so the model is never graded on reproducing prompt text.
"""

from __future__ import annotations

import argparse
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import torch
from torch import nn
from torch.nn import functional as F

from .data import (
    CorpusRecord,
    IGNORE_INDEX,
    TrainingSample,
    collate,
    read_corpus,
    render_plan,
    samples_from_plan,
    split_by_trace,
    synthesize_corpus,
)
from .model import ModelConfig, StepJudgeModel, save_checkpoint
from .template import PromptLayout, load_layout
from .vocab import LabelTokenMap, Vocab


@dataclass(frozen=True)
class TrainProfile:
    """Optimization recipe. The reference profile mirrors the full-scale
    recipe's shape; the toy profile keeps that shape but runs hot enough for
    a from-scratch micro model to converge on synthetic data in minutes."""

    name: str
    learning_rate: float
    batch_size: int
    epochs: int
    warmup_ratio: float = 0.1
    schedule: str = "cosine"
    grad_clip: float = 1.0
    seed: int = 42


REFERENCE_PROFILE = TrainProfile(
    name="reference", learning_rate=1.0e-5, batch_size=256, epochs=3
)
TOY_PROFILE = TrainProfile(name="toy", learning_rate=1.0e-3, batch_size=64, epochs=8)

PROFILES = {p.name: p for p in (REFERENCE_PROFILE, TOY_PROFILE)}


def masked_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(
        logits.reshape(-1, logits.size(-1)), targets.reshape(-1), ignore_index=IGNORE_INDEX
    )


def _lr_lambda(step: int, total_steps: int, warmup_steps: int) -> float:
    if step < warmup_steps:
        return (step + 1) / max(1, warmup_steps)
    progress = (step - warmup_steps) / max(1, total_steps - warmup_steps)
    return 0.5 * (1.0 + math.cos(math.pi * min(1.0, progress)))


@torch.no_grad()
def mask_accuracy(
    model: StepJudgeModel,
    samples: Sequence[TrainingSample],
    label_map: LabelTokenMap,
    batch_size: int = 128,
) -> float:
    """Fraction of mask positions where the higher of the two label-token
    logits picks the target token."""
    model.eval()
    hits = total = 0
    for start in range(0, len(samples), batch_size):
        batch = samples[start : start + batch_size]
        ids, targets, pad_mask = collate(batch, label_map.pad_id)
        logits = model(ids, pad_mask)
        pair = torch.stack(
            (logits[..., label_map.neg_id], logits[..., label_map.pos_id]), dim=-1
        )
        predicted = torch.where(
            pair[..., 1] > pair[..., 0], label_map.pos_id, label_map.neg_id
        )
        at_mask = targets != IGNORE_INDEX
        hits += int((predicted[at_mask] == targets[at_mask]).sum())
        total += int(at_mask.sum())
    return hits / total if total else 0.0


def train_model(
    records: Sequence[CorpusRecord],
    layout: PromptLayout,
    profile: TrainProfile = TOY_PROFILE,
    *,
    holdout_fraction: float = 0.1,
    log_every: int = 0,
) -> tuple[StepJudgeModel, Vocab, dict]:
    torch.manual_seed(profile.seed)
    train_records, holdout_records = split_by_trace(
        records, holdout_fraction, seed=profile.seed
    )
    # A fresh plan per epoch re-rolls every question, filler prefix and unk
    # replacement, so each record is seen in several compositions instead of
    # one repeated string. The holdout's draw seed follows the last epoch's,
    # so its surroundings are unseen too. The vocabulary spans every epoch
    # up front; later epochs must not introduce unknown ids.
    train_plans = [
        render_plan(train_records, layout, seed=profile.seed + epoch)
        for epoch in range(profile.epochs)
    ]
    holdout_plan = render_plan(
        holdout_records, layout, seed=profile.seed + profile.epochs
    )
    vocab = Vocab.build(text for plan in train_plans for text, _, _ in plan)
    label_map = LabelTokenMap.from_vocab(vocab)
    epoch_samples = [samples_from_plan(plan, vocab, label_map) for plan in train_plans]
    holdout_samples = samples_from_plan(holdout_plan, vocab, label_map)

    model = StepJudgeModel(ModelConfig(vocab_size=len(vocab)))
    optimizer = torch.optim.AdamW(model.parameters(), lr=profile.learning_rate)
    steps_per_epoch = math.ceil(len(epoch_samples[0]) / profile.batch_size)
    total_steps = steps_per_epoch * profile.epochs
    warmup_steps = int(total_steps * profile.warmup_ratio)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: _lr_lambda(step, total_steps, warmup_steps)
    )

    started = time.perf_counter()
    step = 0
    for epoch in range(profile.epochs):
        train_samples = epoch_samples[epoch]
        order = torch.randperm(len(train_samples)).tolist()
        model.train()
        for start in range(0, len(train_samples), profile.batch_size):
            batch = [train_samples[i] for i in order[start : start + profile.batch_size]]
            ids, targets, pad_mask = collate(batch, label_map.pad_id)
            logits = model(ids, pad_mask)
            loss = masked_loss(logits, targets)
            optimizer.zero_grad()
            loss.backward()
            nn.utils.clip_grad_norm_(model.parameters(), profile.grad_clip)
            optimizer.step()
            scheduler.step()
            step += 1
            if log_every and step % log_every == 0:
                print(f"epoch {epoch} step {step}/{total_steps} loss {loss.item():.4f}")

    metrics = {
        "profile": profile.name,
        "train_records": len(train_records),
        "holdout_records": len(holdout_records),
        "train_accuracy": mask_accuracy(model, epoch_samples[-1], label_map),
        "holdout_accuracy": mask_accuracy(model, holdout_samples, label_map),
        "steps": step,
        "seconds": round(time.perf_counter() - started, 2),
    }
    return model, vocab, metrics


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="train a step-judgment model")
    parser.add_argument("--corpus", help="labeled-step JSONL file")
    parser.add_argument("--synthesize", type=int, default=0,
                        help="generate this many synthetic records instead of --corpus")
    parser.add_argument("--template", required=True, help="template JSON file")
    parser.add_argument("--out", required=True, help="checkpoint path")
    parser.add_argument("--profile", choices=sorted(PROFILES), default="toy")
    parser.add_argument("--epochs", type=int, help="override the profile's epoch count")
    parser.add_argument("--seed", type=int, help="override the profile's seed")
    args = parser.parse_args(argv)

    if bool(args.corpus) == bool(args.synthesize):
        parser.error("exactly one of --corpus / --synthesize is required")
    layout = load_layout(args.template)
    records = (
        synthesize_corpus(args.synthesize, seed=0)
        if args.synthesize
        else read_corpus(args.corpus)
    )
    profile = PROFILES[args.profile]
    if args.epochs is not None:
        profile = replace(profile, epochs=args.epochs)
    if args.seed is not None:
        profile = replace(profile, seed=args.seed)

    model, vocab, metrics = train_model(records, layout, profile, log_every=50)
    save_checkpoint(args.out, model, vocab, layout.version, extra=metrics)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
