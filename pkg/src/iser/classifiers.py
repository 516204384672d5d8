"""Entity classification over span features and directional relation scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import tensor as T
from .numerics.nn import Linear, Module
from .numerics.tensor import ShapeError, Tensor

DEFAULT_THRESHOLD = 0.4


@dataclass
class EntityScores:
    logits: np.ndarray
    probabilities: np.ndarray

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.logits))

    @classmethod
    def from_logits(cls, logits) -> "EntityScores":
        logits = np.asarray(logits, dtype=np.float64)
        z = np.exp(logits - logits.max(axis=-1, keepdims=True))
        return cls(logits, z / z.sum(axis=-1, keepdims=True))


@dataclass
class RelationScores:
    probabilities: np.ndarray
    threshold: float = DEFAULT_THRESHOLD

    @property
    def predicted(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.probabilities >= self.threshold)]

    @classmethod
    def from_logits(cls, logits, threshold: float = DEFAULT_THRESHOLD) -> "RelationScores":
        return cls(T._stable_sigmoid(np.asarray(logits, dtype=np.float64)), threshold)


@dataclass
class Prediction:
    """Decoded output for one sentence; spans are ``(start, end)`` with ``end`` exclusive."""

    entities: list[tuple[int, int, str]] = field(default_factory=list)
    relations: list[tuple[tuple[int, int], tuple[int, int], str]] = field(default_factory=list)

    def to_record(self, tokens) -> dict:
        index = {(s, e): i for i, (s, e, _) in enumerate(self.entities)}
        return {
            "tokens": list(tokens),
            "entities": [{"type": t, "start": s, "end": e} for s, e, t in self.entities],
            "relations": [{"type": r, "head": index[h], "tail": index[t]} for h, t, r in self.relations],
        }


class EntityClassifier(Module):
    def __init__(self, d: int, d_w: int, n_types: int, rng, dtype=np.float64):
        self.d, self.d_w = d, d_w
        self.linear = Linear(2 * d + d_w, n_types, rng, dtype)

    def __call__(self, s: Tensor, w: Tensor, c: Tensor) -> Tensor:
        if s.shape[-1] != self.d or c.shape[-1] != self.d or w.shape[-1] != self.d_w:
            raise ShapeError(f"entity features have widths {s.shape[-1]}, {w.shape[-1]}, {c.shape[-1]};"
                             f" expected {self.d}, {self.d_w}, {self.d}")
        return self.linear(T.concat([s, w, c], axis=-1))


class RelationClassifier(Module):
    def __init__(self, d: int, d_w: int, n_types: int, rng, dtype=np.float64):
        self.linear = Linear(3 * d + 2 * d_w, n_types, rng, dtype)

    def directed(self, s1, w1, ctx, s2, w2) -> Tensor:
        """Logits for the direction (s1, w1) -> (s2, w2)."""
        return self.linear(T.concat([s1, w1, ctx, s2, w2], axis=-1))

    def __call__(self, s1, w_p, s2, w_q, ctx) -> tuple[Tensor, Tensor]:
        return self.directed(s1, w_p, ctx, s2, w_q), self.directed(s2, w_q, ctx, s1, w_p)


def entity_logits(clf: EntityClassifier, s, w, c) -> EntityScores:
    s, w, c = (T.as_tensor(x) for x in (s, w, c))
    return EntityScores.from_logits(clf(s, w, c).data)


def gap_masks(pairs, n: int) -> np.ndarray:
    """(P, n) boolean masks of the tokens strictly between each pair of spans."""
    mask = np.zeros((len(pairs), n), dtype=bool)
    for i, ((s1, e1), (s2, e2)) in enumerate(pairs):
        lo, hi = min(e1, e2), max(s1, s2)
        if lo < hi:
            mask[i, lo:hi] = True
    return mask


def local_context_batch(H: Tensor, pairs) -> Tensor:
    """Max-pooled gap between each span pair; a zero row when the gap is empty."""
    if not len(pairs):
        return Tensor(np.zeros((0, H.shape[-1]), dtype=H.dtype))
    return T.masked_max(H, gap_masks(pairs, H.shape[0])[:, :, None], axis=-2)


def local_context(H: Tensor, span1, span2) -> Tensor:
    return local_context_batch(H, [(tuple(span1), tuple(span2))])[0]


def relation_logits(clf: RelationClassifier, s1, w_p, s2, w_q, ctx, threshold=DEFAULT_THRESHOLD):
    """Scores for both directions of one span pair."""
    fwd, bwd = clf(*(T.as_tensor(x) for x in (s1, w_p, s2, w_q, ctx)))
    return RelationScores.from_logits(fwd.data, threshold), RelationScores.from_logits(bwd.data, threshold)


def decode_relations(pair_spans, probabilities: np.ndarray, relation_types, threshold: float):
    """Emit ``(head, tail, type)`` for every pair/type cell at or above ``threshold``."""
    out = []
    for (head, tail), probs in zip(pair_spans, probabilities):
        for r in np.flatnonzero(probs >= threshold):
            out.append((head, tail, relation_types[r]))
    return out
