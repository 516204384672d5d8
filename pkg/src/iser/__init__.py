"""Span-based joint entity and relation extraction with cross-attention task fusion."""

from .classifiers import Prediction
from .data import (
    EntitySpan,
    LabelCatalog,
    RelationTriple,
    Sentence,
    dataset_stats,
    load_chddi_json,
    load_dataset,
    load_span_json,
    sample_negatives,
)
from .encoder import Vocab
from .evaluation import EvalReport, compute_prf, evaluate, evaluate_model, match_and_count
from .interpret import attention_dump, attention_dumps
from .model import JointModel, ModelConfig, predict_sentence
from .synthetic import make_corpus
from .training import TrainConfig, joint_loss, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "EntitySpan",
    "EvalReport",
    "JointModel",
    "LabelCatalog",
    "ModelConfig",
    "Prediction",
    "RelationTriple",
    "Sentence",
    "TrainConfig",
    "Vocab",
    "attention_dump",
    "attention_dumps",
    "compute_prf",
    "dataset_stats",
    "evaluate",
    "evaluate_model",
    "joint_loss",
    "load_chddi_json",
    "load_checkpoint",
    "load_dataset",
    "load_span_json",
    "make_corpus",
    "match_and_count",
    "predict_sentence",
    "sample_negatives",
    "save_checkpoint",
    "train",
]
