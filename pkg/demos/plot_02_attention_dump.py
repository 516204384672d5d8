"""
Reading the cross-attention weights
===================================

The fusion step lets each view attend over the other. Queried by the relation
view, the weights show which tokens the entity view is rebuilt from; the
per-token aggregate is the attention mass each token receives.
"""

import tempfile
from pathlib import Path

import numpy as np

from iser import LabelCatalog, ModelConfig, TrainConfig, attention_dumps, make_corpus, train

sentences = make_corpus(20, seed=0)
catalog = LabelCatalog.from_sentences(sentences)
model, _ = train(TrainConfig(epochs=200, batch_size=2, base_lr=2e-3, seed=0), sentences, catalog,
                 ModelConfig(d=32, n_layers=2, n_heads=2, sea_heads=2, d_w=8, k=4, dropout=0.0))

# Both directions come from one forward pass.
for sentence in sentences[:6]:
    dumps = attention_dumps(model, sentence.tokens)
    for direction, dump in dumps.items():
        top = sentence.tokens[int(np.argmax(dump.aggregate))]
        cells = " ".join(f"{t}:{a:.2f}" for t, a in zip(sentence.tokens, dump.aggregate))
        print(f"{direction:<16} top={top:<8} {cells}")
    print()

# The CSV layout is a header of tokens, the matrix rows, then the aggregate
# row, which most plotting tools read directly.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "attention.csv"
    dumps[next(iter(dumps))].write_csv(path)
    print(path.read_text(encoding="utf-8"))
