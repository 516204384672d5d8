"""
Checking gradients against central differences
==============================================

Every backward rule in the autodiff layer can be compared with a numeric
derivative. The relative error is normalized by the size of both gradients, so
tiny gradients near float64 round-off give the noisiest readings.
"""

import numpy as np

from iser import JointModel, LabelCatalog, ModelConfig, Vocab, make_corpus
from iser.data import sample_negatives
from iser.numerics import finite_diff_grad_check, parameter
from iser.training import build_samples, sentence_loss

# A one-line warm-up: f(w) = w**2 at w = 3 is exact under central differences.
w = parameter(np.array([3.0]))
print("quadratic:", finite_diff_grad_check(lambda: (w * w).sum(), {"w": w}))

# The whole model, on one short sentence, with every candidate span labelled.
sentences = make_corpus(20, seed=0)
catalog = LabelCatalog.from_sentences(sentences)
config = ModelConfig(d=16, n_layers=2, n_heads=2, sea_heads=2, d_w=4, k=2, dropout=0.0)
model = JointModel(config, catalog, Vocab.build(sentences), seed=0)
sentence = sentences[0]
spans, pairs = sample_negatives(sentence, 100, 100, np.random.default_rng(0), config.k)
batch = build_samples(sentence, catalog, config.k, spans, pairs)

per_param = {}
worst = finite_diff_grad_check(lambda: sentence_loss(model, sentence, batch).total, model.parameters(),
                               max_coords=20, per_param=per_param)
print(f"max relative error over {len(per_param)} parameter groups: {worst:.2e}")
for name, err in sorted(per_param.items(), key=lambda kv: -kv[1])[:5]:
    print(f"  {name:<40} {err:.2e}")
