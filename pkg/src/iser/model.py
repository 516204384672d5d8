"""The full joint extraction network and sentence-level inference."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .classifiers import (
    DEFAULT_THRESHOLD,
    EntityClassifier,
    Prediction,
    RelationClassifier,
    local_context_batch,
)
from .data import LabelCatalog
from .encoder import Encoder, TaskHeads, Vocab
from .fusion import FusedSequence, Fusion
from .numerics import tensor as T
from .numerics.nn import Module
from .numerics.tensor import Tensor
from .span import SEA, WidthTable, enumerate_spans, span_internal


@dataclass
class ModelConfig:
    d: int = 128
    n_layers: int = 2
    n_heads: int = 4
    sea_heads: int = 4
    d_w: int = 25
    k: int = 10
    dropout: float = 0.1
    fusion_cell: str = "lstm"
    sea_pool: str = "final"
    dtype: str = "float64"

    def __post_init__(self):
        if self.d < 8 or self.d % 2:
            raise ValueError(f"d must be an even number >= 8, got {self.d}")
        if self.d % self.n_heads or self.d % self.sea_heads:
            raise ValueError(f"d={self.d} must be divisible by n_heads and sea_heads")
        if self.k < 1 or self.d_w < 1:
            raise ValueError("k and d_w must be positive")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError(f"dropout must lie in [0, 1], got {self.dropout}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"dtype must be float64 or float32, got {self.dtype!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class Representation:
    base: Tensor
    x_e: Tensor
    x_r: Tensor
    fused: FusedSequence

    @property
    def H(self) -> Tensor:
        return self.fused.H


class JointModel(Module):
    def __init__(self, config: ModelConfig, catalog: LabelCatalog, vocab: Vocab, seed: int = 0):
        self.config = config
        self.catalog = catalog
        rng = np.random.default_rng(seed)
        dtype = np.dtype(config.dtype)
        d = config.d
        self.encoder = Encoder(vocab, d, config.n_layers, config.n_heads, config.dropout, rng, dtype)
        self.heads = TaskHeads(d, rng, dtype)
        self.fusion = Fusion(d, rng, config.fusion_cell, dtype)
        self.widths = WidthTable(config.k, config.d_w, rng, dtype)
        self.sea = SEA(d, config.sea_heads, rng, config.sea_pool, dtype)
        self.entity_clf = EntityClassifier(d, config.d_w, len(catalog.entity_types), rng, dtype)
        self.relation_clf = RelationClassifier(d, config.d_w, len(catalog.relation_types), rng, dtype)

    @property
    def vocab(self) -> Vocab:
        return self.encoder.vocab

    def represent(self, tokens, train: bool = False, rng=None) -> Representation:
        base = self.encoder(tokens, train=train, rng=rng)
        x_e, x_r = self.heads(base)
        return Representation(base, x_e, x_r, self.fusion(x_e, x_r))

    def span_embeddings(self, H: Tensor, spans) -> tuple[Tensor, Tensor]:
        widths = [end - start for start, end in spans]
        return span_internal(H, spans), self.widths(widths)

    def entity_logits(self, H: Tensor, spans, chunk: int = 256) -> Tensor:
        parts = []
        for i in range(0, len(spans), chunk):
            batch = spans[i:i + chunk]
            s, w = self.span_embeddings(H, batch)
            parts.append(self.entity_clf(s, w, self.sea(H, batch)))
        return parts[0] if len(parts) == 1 else T.concat(parts, axis=0)

    def pair_logits(self, H: Tensor, s: Tensor, w: Tensor, spans, pairs) -> Tensor:
        """Directed relation logits (P, R) for ``pairs`` of row indices into ``s``/``w``/``spans``."""
        heads = np.array([i for i, _ in pairs], dtype=np.int64)
        tails = np.array([j for _, j in pairs], dtype=np.int64)
        ctx = local_context_batch(H, [(spans[i], spans[j]) for i, j in pairs])
        return self.relation_clf.directed(s[heads], w[heads], ctx, s[tails], w[tails])

    def predict(self, tokens, threshold: float = DEFAULT_THRESHOLD) -> Prediction:
        rep = self.represent(tokens)
        H = rep.H
        spans = [(c.start, c.end) for c in enumerate_spans(len(tokens), self.config.k)]
        labels = self.entity_logits(H, spans).data.argmax(axis=-1)
        kept = [(span, int(lab)) for span, lab in zip(spans, labels) if lab != 0]
        types = self.catalog.entity_types
        pred = Prediction(entities=[(s, e, types[lab]) for (s, e), lab in kept])
        if len(kept) < 2 or not self.catalog.relation_types:
            return pred
        kept_spans = [span for span, _ in kept]
        s, w = self.span_embeddings(H, kept_spans)
        pairs = [(i, j) for i in range(len(kept)) for j in range(len(kept)) if i != j]
        probs = T._stable_sigmoid(self.pair_logits(H, s, w, kept_spans, pairs).data)
        for (i, j), row in zip(pairs, probs):
            for r in np.flatnonzero(row >= threshold):
                pred.relations.append((kept_spans[i], kept_spans[j], self.catalog.relation_types[r]))
        return pred


def predict_sentence(model: JointModel, tokens, threshold: float = DEFAULT_THRESHOLD) -> Prediction:
    return model.predict(tokens, threshold)
