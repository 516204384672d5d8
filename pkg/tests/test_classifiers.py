import numpy as np
import pytest

from iser.classifiers import (
    DEFAULT_THRESHOLD,
    EntityClassifier,
    EntityScores,
    Prediction,
    RelationClassifier,
    RelationScores,
    decode_relations,
    entity_logits,
    local_context,
    relation_logits,
)
from iser.data import LabelCatalog
from iser.encoder import Vocab
from iser.model import JointModel, ModelConfig
from iser.numerics import ShapeError, parameter


def zero(module):
    for p in module.parameters().values():
        p.data[...] = 0.0


def test_zero_entity_classifier_is_uniform(rng):
    clf = EntityClassifier(4, 2, 3, rng)
    zero(clf)
    scores = entity_logits(clf, rng.normal(size=4), rng.normal(size=2), rng.normal(size=4))
    np.testing.assert_allclose(scores.probabilities, [1 / 3] * 3, atol=1e-15)


def test_argmax_and_normalization(rng):
    assert EntityScores.from_logits([5.0, 0.0, 0.0]).predicted == 0
    probs = EntityScores.from_logits(rng.normal(size=(10, 4)) * 5).probabilities
    np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-6)


def test_entity_classifier_checks_widths(rng):
    clf = EntityClassifier(4, 2, 3, rng)
    with pytest.raises(ShapeError):
        clf(parameter(np.zeros(4)), parameter(np.zeros(3)), parameter(np.zeros(4)))


def test_local_context_gap():
    H = parameter(np.arange(12.0).reshape(6, 2))
    # spans (start, width) (0,1) and (3,2) -> (0,1) and (3,5): gap rows 1..2
    np.testing.assert_array_equal(local_context(H, (0, 1), (3, 5)).data, H.data[2])
    np.testing.assert_array_equal(local_context(H, (0, 2), (2, 3)).data, [0.0, 0.0])


def test_local_context_symmetric(rng):
    H = parameter(rng.normal(size=(8, 3)))
    np.testing.assert_array_equal(local_context(H, (0, 2), (5, 7)).data, local_context(H, (5, 7), (0, 2)).data)


def test_zero_relation_classifier_gives_one_half(rng):
    clf = RelationClassifier(4, 2, 5, rng)
    zero(clf)
    fwd, bwd = relation_logits(clf, *(rng.normal(size=s) for s in (4, 2, 4, 2, 4)))
    assert np.all(fwd.probabilities == 0.5) and np.all(bwd.probabilities == 0.5)


def test_swapping_pair_swaps_outputs(rng):
    clf = RelationClassifier(4, 2, 3, rng)
    s1, w1, s2, w2, ctx = (rng.normal(size=s) for s in (4, 2, 4, 2, 4))
    a_fwd, a_bwd = relation_logits(clf, s1, w1, s2, w2, ctx)
    b_fwd, b_bwd = relation_logits(clf, s2, w2, s1, w1, ctx)
    np.testing.assert_array_equal(a_fwd.probabilities, b_bwd.probabilities)
    np.testing.assert_array_equal(a_bwd.probabilities, b_fwd.probabilities)


def test_threshold_default_and_boundary():
    assert DEFAULT_THRESHOLD == 0.4
    assert RelationScores(np.array([0.39, 0.41])).predicted == [1]
    assert RelationScores(np.array([0.4]), 0.4).predicted == [0]


def test_decode_relations():
    pairs = [((0, 1), (2, 3)), ((2, 3), (0, 1))]
    probs = np.array([[0.9, 0.1], [0.3, 0.5]])
    assert decode_relations(pairs, probs, ["A", "B"], 0.4) == [((0, 1), (2, 3), "A"), ((2, 3), (0, 1), "B")]


def test_prediction_record():
    pred = Prediction([(0, 1, "Peop"), (3, 4, "Loc")], [((0, 1), (3, 4), "Live_in")])
    rec = pred.to_record(["a", "b", "c", "d"])
    assert rec["relations"] == [{"type": "Live_in", "head": 0, "tail": 1}]


# -- decoding with the full model ----------------------------------------------------


@pytest.fixture
def small_model():
    cat = LabelCatalog(["none", "X"], ["R", "S"])
    cfg = ModelConfig(d=8, n_layers=1, n_heads=2, sea_heads=2, d_w=4, k=3, dropout=0.0)
    return JointModel(cfg, cat, Vocab(["a", "b", "c"]), seed=0)


def test_no_entities_means_no_relations(small_model):
    zero(small_model.entity_clf)
    small_model.entity_clf.linear.bias.data[0] = 1.0
    pred = small_model.predict(["a", "b", "c"])
    assert pred.entities == [] and pred.relations == []


def test_single_entity_means_no_relations(small_model):
    zero(small_model.entity_clf)
    zero(small_model.widths)
    small_model.widths.table.data[2, 0] = 1.0
    small_model.entity_clf.linear.weight.data[8, 1] = 10.0
    small_model.entity_clf.linear.bias.data[1] = -5.0
    small_model.relation_clf.linear.bias.data[...] = 50.0
    pred = small_model.predict(["a", "b", "c"])
    assert pred.entities == [(0, 3, "X")]
    assert pred.relations == []


def test_crafted_parameters_give_one_triplet(small_model):
    m = small_model
    d = 8
    zero(m.entity_clf)
    zero(m.widths)
    zero(m.relation_clf)
    # width-2 spans are entities, nothing else
    m.widths.table.data[1, 0] = 1.0
    m.entity_clf.linear.weight.data[d, 1] = 10.0
    m.entity_clf.linear.bias.data[1] = -5.0
    tokens = ["a", "b", "c"]
    H = m.represent(tokens).H
    s_a, s_b = m.span_embeddings(H, [(0, 2), (1, 3)])[0].data
    u = s_a - s_b
    assert np.dot(u, u) > 1e-6
    # type R fires only when the head is span (0, 2); type S never fires
    scale = 40.0 / np.dot(u, u)
    m.relation_clf.linear.weight.data[:d, 0] = scale * u
    m.relation_clf.linear.bias.data[0] = -scale * np.dot(u, (s_a + s_b) / 2)
    m.relation_clf.linear.bias.data[1] = -10.0
    pred = m.predict(tokens)
    assert sorted(pred.entities) == [(0, 2, "X"), (1, 3, "X")]
    assert pred.relations == [((0, 2), (1, 3), "R")]


def test_argmax_invariant_to_logit_shift(rng):
    logits = rng.normal(size=(20, 5))
    shifted = logits + rng.normal(size=(20, 1)) * 100
    np.testing.assert_array_equal(EntityScores.from_logits(logits).logits.argmax(axis=-1),
                                  EntityScores.from_logits(shifted).logits.argmax(axis=-1))


def test_relations_stay_within_entities_and_pair_count(tiny_model, corpus, monkeypatch):
    seen = []
    original = tiny_model.pair_logits

    def spy(H, s, w, spans, pairs):
        seen.append((len(spans), len(pairs)))
        return original(H, s, w, spans, pairs)

    monkeypatch.setattr(tiny_model, "pair_logits", spy)
    tiny_model.entity_clf.linear.bias.data[1] += 3.0  # plenty of entity spans
    for s in corpus[:4]:
        pred = tiny_model.predict(s.tokens, 0.1)
        spans = {(a, b) for a, b, _ in pred.entities}
        assert all(h in spans and t in spans for h, t, _ in pred.relations)
    assert seen and all(p == m * (m - 1) for m, p in seen)
