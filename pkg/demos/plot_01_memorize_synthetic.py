"""
Memorizing a small templated corpus
===================================

The synthetic corpus has 20 sentences, three entity types and two relation
types. A model with enough capacity should fit it perfectly, which makes it a
quick end-to-end sanity check of spans, classifiers, loss and optimizer.
"""

# The corpus is deterministic given its seed.
from iser import LabelCatalog, ModelConfig, TrainConfig, evaluate_model, make_corpus, train

sentences = make_corpus(20, seed=0)
catalog = LabelCatalog.from_sentences(sentences)
print("entity types:", catalog.entity_types)
print("relation types:", catalog.relation_types)
print(" ".join(sentences[4].tokens))

# A narrow model trains in well under a minute on one core. Dropout is off
# because the goal here is memorization.
model_config = ModelConfig(d=32, n_layers=2, n_heads=2, sea_heads=2, d_w=8, k=4, dropout=0.0)
train_config = TrainConfig(epochs=200, batch_size=2, base_lr=2e-3, seed=0)


def report(epoch, loss, model):
    if (epoch + 1) % 50 == 0:
        print(f"epoch {epoch + 1:3d}  loss {loss:.4f}")


model, trace = train(train_config, sentences, catalog, model_config, on_epoch=report)

# Strict matching on the training set: both F1 scores should be 1.0.
result, predictions = evaluate_model(model, sentences)
print(result.format_table())

# Decoded output for one sentence, in the span JSON layout.
print(predictions[4].to_record(sentences[4].tokens))
