"""Joint loss, the training loop, and checkpoint files."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import LabelCatalog, Sentence, sample_negatives
from .encoder import Vocab
from .model import JointModel, ModelConfig
from .numerics.losses import bce_with_logits, cross_entropy
from .numerics.optim import AdamState, adam_step
from .numerics.tensor import Tensor

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = "iser-checkpoint/1"
PRETRAINED_ENCODER_LR = 2e-5  # the desk encoder trains from scratch, hence the larger default


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 70
    batch_size: int = 2
    base_lr: float = 1e-3
    threshold: float = 0.4
    neg_entities: int = 100
    neg_relations: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "neg_entities", "neg_relations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.base_lr <= 0 or not 0 < self.threshold < 1:
            raise ValueError("base_lr must be positive and threshold in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class LossParts:
    total: Tensor
    entity: Tensor
    relation: Tensor


def joint_loss(entity_logits: Tensor, entity_labels, relation_logits: Tensor | None = None,
               relation_targets=None) -> LossParts:
    """Mean cross-entropy over entity samples plus mean BCE over pair x type cells.

    With no relation samples the relation term is exactly zero.
    """
    labels = np.asarray(entity_labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("entity batch is empty")
    l_e = cross_entropy(entity_logits, labels)
    if relation_logits is None or relation_logits.data.size == 0:
        l_r = Tensor(np.zeros((), dtype=l_e.dtype))
    else:
        l_r = bce_with_logits(relation_logits, relation_targets)
    return LossParts(l_e + l_r, l_e, l_r)


@dataclass
class SentenceBatch:
    """Training samples of one sentence: candidate spans with labels, pairs with targets."""

    spans: list[tuple[int, int]]
    labels: list[int]
    pairs: list[tuple[int, int]] = field(default_factory=list)
    targets: np.ndarray | None = None


def build_samples(sentence: Sentence, catalog: LabelCatalog, k: int, neg_spans, neg_pairs) -> SentenceBatch:
    """Gold spans and negatives as one entity batch; gold and negative pairs index into it."""
    spans, labels = [], []
    slot: dict[tuple[int, int], int] = {}
    entity_slot = {}
    for idx, e in enumerate(sentence.entities):
        key = (e.start, e.end)
        if e.width > k:
            logger.warning("sentence %s: gold span %s wider than k=%d is not a training candidate",
                           sentence.id, key, k)
            continue
        if key not in slot:
            slot[key] = len(spans)
            spans.append(key)
            labels.append(catalog.entity_index(e.type))
        entity_slot[idx] = slot[key]
    for key in neg_spans:
        if key not in slot:
            slot[key] = len(spans)
            spans.append(key)
            labels.append(0)

    n_rel = len(catalog.relation_types)
    rows: dict[tuple[int, int], np.ndarray] = {}
    for r in sentence.relations:
        if r.head not in entity_slot or r.tail not in entity_slot:
            continue
        key = (entity_slot[r.head], entity_slot[r.tail])
        if key[0] == key[1]:
            continue
        rows.setdefault(key, np.zeros(n_rel))[catalog.relation_index(r.type)] = 1.0
    for h, t in neg_pairs:
        if h in entity_slot and t in entity_slot:
            key = (entity_slot[h], entity_slot[t])
            if key[0] != key[1]:
                rows.setdefault(key, np.zeros(n_rel))
    pairs = list(rows)
    targets = np.array([rows[p] for p in pairs]) if pairs else np.zeros((0, n_rel))
    return SentenceBatch(spans, labels, pairs, targets)


def sentence_loss(model: JointModel, sentence: Sentence, batch: SentenceBatch,
                  train: bool = False, rng=None) -> LossParts:
    rep = model.represent(sentence.tokens, train=train, rng=rng)
    H = rep.H
    ent_logits = model.entity_logits(H, batch.spans)
    rel_logits = None
    if batch.pairs and model.catalog.relation_types:
        s, w = model.span_embeddings(H, batch.spans)
        rel_logits = model.pair_logits(H, s, w, batch.spans, batch.pairs)
    return joint_loss(ent_logits, batch.labels, rel_logits, batch.targets)


def total_steps(n_sentences: int, config: TrainConfig) -> int:
    return config.epochs * math.ceil(n_sentences / config.batch_size)


def train(config: TrainConfig, sentences: list[Sentence], catalog: LabelCatalog,
          model_config: ModelConfig | None = None, vocab: Vocab | None = None,
          model: JointModel | None = None, on_epoch=None):
    """Optimize every parameter of a fresh (or given) model; returns ``(model, loss_trace)``.

    ``loss_trace[e]`` is the mean sentence loss of epoch ``e``. ``on_epoch`` is
    called as ``on_epoch(epoch, mean_loss, model)`` after each epoch.
    """
    if not sentences:
        raise TrainingError("training set is empty")
    model_config = model_config or ModelConfig()
    if model is None:
        vocab = vocab or Vocab.build(sentences)
        model = JointModel(model_config, catalog, vocab, seed=config.seed)
    k = model.config.k
    too_wide = sum(e.width > k for s in sentences for e in s.entities)
    if too_wide:
        logger.warning("%d gold entities are wider than k=%d", too_wide, k)

    params = model.parameters()
    state = AdamState(base_lr=config.base_lr, total_steps=total_steps(len(sentences), config))
    order_rng = np.random.default_rng([config.seed, 1])
    sample_rng = np.random.default_rng([config.seed, 2])
    dropout_rng = np.random.default_rng([config.seed, 3])
    trace = []
    for epoch in range(config.epochs):
        order = order_rng.permutation(len(sentences))
        epoch_losses = []
        for b in range(0, len(order), config.batch_size):
            members = order[b:b + config.batch_size]
            for p in params.values():
                p.zero_grad()
            for i in members:
                sent = sentences[i]
                neg_spans, neg_pairs = sample_negatives(sent, config.neg_entities, config.neg_relations,
                                                        sample_rng, k)
                batch = build_samples(sent, catalog, k, neg_spans, neg_pairs)
                loss = sentence_loss(model, sent, batch, train=True, rng=dropout_rng).total
                value = float(loss.data)
                if not math.isfinite(value):
                    raise TrainingError(f"non-finite loss on sentence {sent.id!r}")
                loss.backward(np.asarray(1.0 / len(members), dtype=loss.dtype))
                epoch_losses.append(value)
            adam_step(params, {n: p.grad for n, p in params.items()}, state)
        trace.append(float(np.mean(epoch_losses)))
        logger.info("epoch %d loss %.6f lr %.3g", epoch + 1, trace[-1], state.lr())
        if on_epoch is not None:
            on_epoch(epoch, trace[-1], model)
    return model, trace


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: JointModel, train_config: TrainConfig | None = None, extra=None):
    meta = {
        "version": CHECKPOINT_VERSION,
        "catalog": model.catalog.to_dict(),
        "model_config": model.config.to_dict(),
        "train_config": train_config.to_dict() if train_config else None,
        "vocab": model.vocab.itos,
        "extra": extra or {},
    }
    arrays = {f"param/{name}": p.data for name, p in model.named_parameters()}
    arrays["meta"] = np.array(json.dumps(meta, ensure_ascii=False, sort_keys=True))
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path) -> tuple[JointModel, dict]:
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    with archive:
        if "meta" not in archive.files:
            raise CheckpointError(f"{path} has no metadata")
        meta = json.loads(str(archive["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"checkpoint version {meta.get('version')!r} != {CHECKPOINT_VERSION!r}")
        vocab = Vocab(meta["vocab"][1:])
        model = JointModel(ModelConfig.from_dict(meta["model_config"]),
                           LabelCatalog.from_dict(meta["catalog"]), vocab)
        for name, p in model.named_parameters():
            key = f"param/{name}"
            if key not in archive.files:
                raise CheckpointError(f"checkpoint lacks parameter {name!r}")
            stored = archive[key]
            if stored.shape != p.shape:
                raise CheckpointError(f"parameter {name!r} has shape {stored.shape}, expected {p.shape}")
            p.data = stored.astype(p.dtype)
    return model, meta
