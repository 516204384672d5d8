"""Token-level summaries of the fusion cross-attention weights."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

QUERY_RELATIONS = "query=relations"
QUERY_ENTITIES = "query=entities"
DIRECTIONS = (QUERY_RELATIONS, QUERY_ENTITIES)


@dataclass
class AttentionDump:
    tokens: list[str]
    direction: str
    matrix: np.ndarray
    aggregate: np.ndarray

    def write_csv(self, path):
        """Header of tokens, the n matrix rows, then the aggregate row."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.tokens)
            for row in self.matrix:
                writer.writerow([f"{x:.8f}" for x in row])
            writer.writerow([f"{x:.8f}" for x in self.aggregate])


def aggregate_columns(matrix: np.ndarray) -> np.ndarray:
    """Attention mass received by each token: column sums over n query rows, divided by n."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return matrix.sum(axis=0) / matrix.shape[0]


def _dump(tokens, direction, matrix) -> AttentionDump:
    matrix = np.array(matrix, dtype=np.float64)
    return AttentionDump(list(tokens), direction, matrix, aggregate_columns(matrix))


def attention_dumps(model, tokens) -> dict[str, AttentionDump]:
    """Both directions from a single eval-mode forward pass.

    Queried by the relation view, the weights are those revising the entity
    view (and vice versa).
    """
    if len(tokens) == 0:
        raise ValueError("cannot dump attention for an empty sentence")
    rep = model.represent(list(tokens))
    return {
        QUERY_RELATIONS: _dump(tokens, QUERY_RELATIONS, rep.fused.attn_e),
        QUERY_ENTITIES: _dump(tokens, QUERY_ENTITIES, rep.fused.attn_r),
    }


def attention_dump(model, tokens, direction: str = QUERY_RELATIONS) -> AttentionDump:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return attention_dumps(model, tokens)[direction]


def read_csv(path) -> AttentionDump:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    tokens = rows[0]
    matrix = np.array(rows[1:-1], dtype=np.float64)
    return AttentionDump(tokens, "", matrix, np.array(rows[-1], dtype=np.float64))
