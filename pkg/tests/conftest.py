import time

import numpy as np
import pytest

from iser.data import LabelCatalog
from iser.encoder import Vocab
from iser.model import JointModel, ModelConfig
from iser.synthetic import make_corpus
from iser.training import TrainConfig, train

# memorization setup shared by the acceptance suite and the end-to-end checks
MEMORIZE_MODEL = ModelConfig(d=32, n_layers=2, n_heads=2, sea_heads=2, d_w=8, k=4, dropout=0.0)
MEMORIZE_TRAIN = TrainConfig(epochs=200, batch_size=2, base_lr=2e-3, seed=0)

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def corpus():
    return make_corpus(20, seed=0)


@pytest.fixture(scope="session")
def catalog(corpus):
    return LabelCatalog.from_sentences(corpus)


@pytest.fixture
def tiny_model(corpus, catalog):
    cfg = ModelConfig(d=16, n_layers=1, n_heads=2, sea_heads=2, d_w=4, k=3, dropout=0.0)
    return JointModel(cfg, catalog, Vocab.build(corpus), seed=3)


@pytest.fixture(scope="session")
def memorized(corpus, catalog):
    """``(model, loss_trace, seconds)`` after training on the synthetic corpus."""
    start = time.perf_counter()
    model, trace = train(MEMORIZE_TRAIN, corpus, catalog, MEMORIZE_MODEL)
    return model, trace, time.perf_counter() - start
