"""Word-level vocabulary with the reserved tokens the protocol needs intact."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .errors import VocabError
from .template import NEG_TOKEN, POS_TOKEN

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
MASK_TOKEN = "<mask>"

# Reserved tokens must survive adjacent punctuation ("<mask>," splits into
# "<mask>" and ","), so they get their own alternatives ahead of the
# plain non-space run.
_TOKEN_RE = re.compile(r"<mask>|<\+>|<->|\S+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class Vocab:
    id_to_token: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_token_to_id", {tok: i for i, tok in enumerate(self.id_to_token)}
        )

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int | None:
        return self._token_to_id.get(token)

    def encode(self, text: str) -> list[int]:
        unk = self._token_to_id[UNK_TOKEN]
        return [self._token_to_id.get(tok, unk) for tok in tokenize(text)]

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocab":
        seen: dict[str, None] = {}
        for text in texts:
            for token in tokenize(text):
                seen.setdefault(token, None)
        specials = [PAD_TOKEN, UNK_TOKEN, MASK_TOKEN, POS_TOKEN, NEG_TOKEN]
        rest = sorted(tok for tok in seen if tok not in specials)
        return cls(id_to_token=tuple(specials + rest))


@dataclass(frozen=True)
class LabelTokenMap:
    """Ids of the tokens the serving contract cannot run without."""

    pos_id: int
    neg_id: int
    mask_id: int
    pad_id: int

    @classmethod
    def from_vocab(cls, vocab: Vocab) -> "LabelTokenMap":
        ids = {}
        for name, token in (
            ("pos_id", POS_TOKEN),
            ("neg_id", NEG_TOKEN),
            ("mask_id", MASK_TOKEN),
            ("pad_id", PAD_TOKEN),
        ):
            tid = vocab.id_of(token)
            if tid is None:
                raise VocabError(f"vocabulary lacks required token {token!r}")
            ids[name] = tid
        return cls(**ids)
