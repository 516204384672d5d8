"""Desk-scale trainable encoder and the two task-specific feedforward heads.

The encoder stands in for a pretrained language model: learned token
embeddings plus fixed sinusoidal positions, a few post-norm self-attention
blocks, and a learned CLS vector appended after the last token. Its output has
``n + 1`` rows; the heads read only the first ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import tensor as T
from .numerics.nn import FeedForward, LayerNorm, Module, MultiHeadSelfAttention, sinusoidal_positions
from .numerics.tensor import ShapeError, Tensor

UNK = "<unk>"


class Vocab:
    """Token to index map with a shared unknown-token entry at index 0."""

    def __init__(self, tokens=()):
        self.itos = [UNK]
        self.stoi = {UNK: 0}
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    @classmethod
    def build(cls, sentences, min_count: int = 1) -> "Vocab":
        counts: dict[str, int] = {}
        for s in sentences:
            for tok in s.tokens:
                counts[tok] = counts.get(tok, 0) + 1
        return cls(tok for tok, c in counts.items() if c >= min_count)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def lookup(self, tokens) -> np.ndarray:
        return np.array([self.stoi.get(t, 0) for t in tokens], dtype=np.int64)


@dataclass
class TaskRepresentations:
    base: Tensor
    x_e: Tensor
    x_r: Tensor


class EncoderBlock(Module):
    def __init__(self, d: int, n_heads: int, rng, dtype):
        self.attn = MultiHeadSelfAttention(d, n_heads, rng, out_proj=True, dtype=dtype)
        self.norm1 = LayerNorm(d, dtype)
        self.ffn = FeedForward(d, d, d, rng, dtype)
        self.norm2 = LayerNorm(d, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm1(x + self.attn(x))
        return self.norm2(x + self.ffn(x))


class Encoder(Module):
    def __init__(self, vocab: Vocab, d: int = 128, n_layers: int = 2, n_heads: int = 4,
                 dropout: float = 0.1, rng=None, dtype=np.float64):
        if d < 8:
            raise ValueError(f"model width must be at least 8, got {d}")
        if d % n_heads:
            raise ValueError(f"model width {d} is not divisible by {n_heads} heads")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.vocab = vocab
        self.d = d
        self.dropout = dropout
        self.embedding = T.parameter(rng.normal(0.0, d ** -0.5, size=(len(vocab), d)), dtype=dtype)
        self.cls = T.parameter(rng.normal(0.0, d ** -0.5, size=(1, d)), dtype=dtype)
        self.blocks = [EncoderBlock(d, n_heads, rng, dtype) for _ in range(n_layers)]

    def embed_tokens(self, tokens) -> Tensor:
        """Token-embedding rows before positions are added (unknown tokens share row 0)."""
        return self.embedding[self.vocab.lookup(tokens)]

    def __call__(self, tokens, train: bool = False, rng=None) -> Tensor:
        if len(tokens) == 0:
            raise ShapeError("cannot encode an empty token list")
        n = len(tokens)
        x = T.concat([self.embed_tokens(tokens), self.cls], axis=0) * math.sqrt(self.d)
        x = x + sinusoidal_positions(n + 1, self.d, x.dtype)
        x = T.dropout(x, self.dropout, rng, train)
        for block in self.blocks:
            x = T.dropout(block(x), self.dropout, rng, train)
        return x

    def load_pretrained(self, path) -> int:
        """Overwrite embedding rows from a ``token v1 ... vd`` text file; returns rows set."""
        found = 0
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.rstrip("\n").split()
                if not parts:
                    continue
                if len(parts) != self.d + 1:
                    raise ValueError(f"{path}:{lineno}: expected a token and {self.d} values")
                token, values = parts[0], np.array(parts[1:], dtype=np.float64)
                if token in self.vocab:
                    self.embedding.data[self.vocab.stoi[token]] = values
                    found += 1
        return found


def encode_tokens(encoder: Encoder, tokens, mode: str = "eval", rng=None) -> Tensor:
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return encoder(tokens, train=mode == "train", rng=rng)


class TaskHeads(Module):
    """Independent two-layer ReLU heads producing the entity and relation views."""

    def __init__(self, d: int, rng, dtype=np.float64):
        self.entity = FeedForward(d, d, d, rng, dtype)
        self.relation = FeedForward(d, d, d, rng, dtype)

    def __call__(self, base: Tensor) -> tuple[Tensor, Tensor]:
        tokens = base[:-1]  # the CLS row stays out of both views
        return self.entity(tokens), self.relation(tokens)


def task_heads(heads: TaskHeads, base: Tensor) -> tuple[Tensor, Tensor]:
    return heads(base)
