"""Trainable scoring server for step-level reasoning judgments.

Loads a shared prompt-template JSON, trains a small causal transformer to
fill masked verdict slots from labeled-step corpora, and serves the masked-
query wire protocol over HTTP.
"""

from .template import PromptLayout, load_layout
from .vocab import LabelTokenMap, Vocab

__all__ = ["PromptLayout", "load_layout", "Vocab", "LabelTokenMap"]
__version__ = "0.1.0"
