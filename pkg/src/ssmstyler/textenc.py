"""Toy text encoder: whitespace tokenizer, fixed vocabulary, embedding table,
and the contrastive projection head for text style embeddings."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import autodiff as ad
from .errors import CorruptCheckpoint, DegenerateEmbedding, InvalidArgument
from .params import ParamStore

_WORD_SPLIT = re.compile(r"[^a-z0-9']+")


@dataclass(frozen=True)
class Vocabulary:
    entries: tuple[str, ...]
    unk_index: int = 0

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise InvalidArgument("vocabulary entries must be unique")
        if not 0 <= self.unk_index < len(self.entries):
            raise InvalidArgument("unk_index out of range")

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, word: str) -> int:
        try:
            return self.entries.index(word)
        except ValueError:
            return self.unk_index


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class TextEmbedding:
    tokens: np.ndarray  # L_text x d_text
    pooled: np.ndarray  # d_text


def load_vocabulary(path=None) -> Vocabulary:
    """Load the one-word-per-line vocabulary; line 0 must be `<unk>`."""
    if path is None:
        text = resources.files("ssmstyler").joinpath("data/vocab.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = [line.strip() for line in text.splitlines() if line.strip()]
    if not words or words[0] != "<unk>":
        raise InvalidArgument("vocabulary file must start with the literal token <unk>")
    return Vocabulary(tuple(words), unk_index=0)


def tokenize(prompt: str, vocab: Vocabulary) -> TokenSequence:
    """Lowercase, split on whitespace/punctuation, map to vocabulary indices."""
    words = [w for w in _WORD_SPLIT.split(prompt.lower()) if w]
    if not words:
        raise InvalidArgument("prompt contains no words")
    return TokenSequence(tuple(vocab.index(w) for w in words))


def embed_text_tensors(tokens: TokenSequence, table) -> tuple[ad.Tensor, ad.Tensor]:
    """Differentiable per-token embeddings and their mean pool."""
    table_v = ad.value_of(table)
    ids = np.asarray(tokens.ids, dtype=np.intp)
    if ids.size == 0:
        raise InvalidArgument("token sequence is empty")
    if ids.max() >= table_v.shape[0]:
        raise CorruptCheckpoint(
            f"token id {int(ids.max())} outside embedding table of {table_v.shape[0]} rows"
        )
    rows = ad.gather_rows(table, ids)
    return rows, ad.tmean(rows, axis=0)


def embed_text(tokens: TokenSequence, params: ParamStore) -> TextEmbedding:
    rows, pooled = embed_text_tensors(tokens, params["text.embedding"])
    return TextEmbedding(rows.value, pooled.value)


def normalize_tensor(vec) -> ad.Tensor:
    """L2-normalize a vector; exactly-zero input is a degenerate embedding."""
    v = ad.value_of(vec)
    norm_sq = float(v @ v)
    if norm_sq == 0.0:
        raise DegenerateEmbedding("cannot normalize an exactly-zero embedding")
    return ad.div(vec, ad.sqrt(ad.tsum(ad.mul(vec, vec))))


def project_style_tensors(pooled, weight, bias) -> ad.Tensor:
    """Affine map then L2 normalization; shared by both contrastive heads."""
    return normalize_tensor(ad.add(ad.matmul(weight, pooled), bias))


def project_style_text(embedding: TextEmbedding, params: ParamStore) -> np.ndarray:
    return project_style_tensors(
        embedding.pooled, params["phi_text.weight"], params["phi_text.bias"]
    ).value
