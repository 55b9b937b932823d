"""Small decoder-only transformer that fills masked label slots."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .vocab import Vocab


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    max_len: int = 256


class StepJudgeModel(nn.Module):
    """Causal transformer over word tokens; logits at mask positions carry
    the label verdicts. No dropout, so eval-mode inference is deterministic."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.d_model)
        self.position_embedding = nn.Embedding(config.max_len, config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.d_ff,
            dropout=0.0,
            batch_first=True,
            norm_first=True,
        )
        self.blocks = nn.TransformerEncoder(
            layer, num_layers=config.n_layers, enable_nested_tensor=False
        )
        self.final_norm = nn.LayerNorm(config.d_model)
        self.lm_head = nn.Linear(config.d_model, config.vocab_size)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor | None = None) -> torch.Tensor:
        """ids [batch, time] -> logits [batch, time, vocab].

        pad_mask is True at padding positions.
        """
        batch, time = ids.shape
        if time > self.config.max_len:
            raise ValueError(f"sequence length {time} exceeds model maximum {self.config.max_len}")
        positions = torch.arange(time, device=ids.device).unsqueeze(0).expand(batch, time)
        hidden = self.token_embedding(ids) + self.position_embedding(positions)
        causal = torch.triu(
            torch.ones(time, time, dtype=torch.bool, device=ids.device), diagonal=1
        )
        hidden = self.blocks(hidden, mask=causal, src_key_padding_mask=pad_mask)
        return self.lm_head(self.final_norm(hidden))


def save_checkpoint(
    path: str | Path,
    model: StepJudgeModel,
    vocab: Vocab,
    template_version: str,
    extra: dict | None = None,
) -> None:
    torch.save(
        {
            "config": asdict(model.config),
            "state_dict": model.state_dict(),
            "vocab": list(vocab.id_to_token),
            "template_version": template_version,
            "extra": extra or {},
        },
        str(path),
    )


def load_checkpoint(path: str | Path) -> tuple[StepJudgeModel, Vocab, str, dict]:
    payload = torch.load(str(path), map_location="cpu", weights_only=True)
    config = ModelConfig(**payload["config"])
    model = StepJudgeModel(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    vocab = Vocab(id_to_token=tuple(payload["vocab"]))
    return model, vocab, payload["template_version"], payload.get("extra", {})
