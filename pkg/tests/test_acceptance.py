"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL/SKIP line; the lines are printed in the
"acceptance criteria" section of the pytest terminal summary.
"""

import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, MEMORIZE_TRAIN

from iser import config as run_config
from iser.classifiers import DEFAULT_THRESHOLD, RelationClassifier, relation_logits
from iser.data import (
    EntitySpan,
    RelationTriple,
    Sentence,
    dataset_stats,
    load_chddi_json,
    load_span_json,
    sample_negatives,
)
from iser.encoder import Vocab
from iser.evaluation import TypeCounts, compute_prf, evaluate_model, prf
from iser.fusion import cross_attend
from iser.interpret import attention_dumps
from iser.model import JointModel, ModelConfig
from iser.numerics import Tensor, finite_diff_grad_check
from iser.numerics import tensor as T
from iser.span import SEA, build_masks, enumerate_spans
from iser.synthetic import CHDDI_TRAIN_SHAPE, make_chddi_records
from iser.training import (
    TrainConfig,
    build_samples,
    joint_loss,
    load_checkpoint,
    save_checkpoint,
    sentence_loss,
    train,
)


@contextmanager
def criterion(number: int, title: str):
    label = f"criterion {number}: {title}"
    try:
        yield
    except pytest.skip.Exception as exc:
        ACCEPTANCE_LINES.append(f"SKIP  {label} ({exc})")
        raise
    except BaseException:
        ACCEPTANCE_LINES.append(f"FAIL  {label}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  {label}")
    print(f"PASS  {label}")


def test_01_gradient_integrity(catalog, corpus):
    with criterion(1, "end-to-end finite-difference check < 1e-4 in under a minute"):
        cfg = ModelConfig(d=16, n_layers=2, n_heads=2, sea_heads=2, d_w=4, k=2, dropout=0.0)
        model = JointModel(cfg, catalog, Vocab.build(corpus), seed=0)
        sent = Sentence(["Ines", "lives", "in", "Lima"], [EntitySpan(0, 1, "Peop"), EntitySpan(3, 4, "Loc")],
                        [RelationTriple(0, 1, "Live_in")])
        neg_spans, neg_pairs = sample_negatives(sent, 100, 100, np.random.default_rng(0), cfg.k)
        batch = build_samples(sent, catalog, cfg.k, neg_spans, neg_pairs)
        assert len(sent.tokens) == 4 and batch.pairs
        start = time.perf_counter()
        per_param = {}
        err = finite_diff_grad_check(lambda: sentence_loss(model, sent, batch).total, model.parameters(),
                                     eps=1e-4, max_coords=40, rng=np.random.default_rng(0),
                                     per_param=per_param)
        elapsed = time.perf_counter() - start
        worst = max(per_param, key=per_param.get)
        print(f"max relative error {err:.3e} at {worst}; {elapsed:.1f}s")
        assert set(per_param) == set(model.parameters())
        assert err < 1e-4
        assert elapsed < 60


def test_02_overfitting_oracle(memorized, corpus, catalog):
    with criterion(2, "memorize the synthetic corpus: NER and RE micro F1 = 1.0 within 200 epochs"):
        model, trace, seconds = memorized
        assert len(catalog.entity_types) == 4 and len(catalog.relation_types) == 2 and len(corpus) == 20
        assert MEMORIZE_TRAIN.epochs <= 200
        report, _ = evaluate_model(model, corpus)
        print(f"NER F1 {report.ner.micro.f1}, RE F1 {report.re.micro.f1}, {seconds:.1f}s")
        assert report.ner.micro.f1 == 1.0
        assert report.re.micro.f1 == 1.0
        assert np.mean(trace[:5]) > np.mean(trace[-5:])
        assert seconds < 300


def test_03_span_oracle():
    with criterion(3, "span enumeration equals brute force; masks complementary"):
        for n in range(1, 13):
            for k in range(1, 6):
                brute = {(start, width) for start in range(n) for width in range(1, k + 1) if start + width <= n}
                spans = enumerate_spans(n, k)
                assert {(c.start, c.width) for c in spans} == brute
                assert len(spans) == len(brute)
                for c in spans:
                    span_mask, context_mask = build_masks(c.start, c.width, n)
                    assert np.all(span_mask + context_mask == 1)
                    assert span_mask.sum() == c.width


def test_04_metric_oracle():
    with criterion(4, "hand-derived precision, recall and F1"):
        s = prf(1, 1, 1)
        assert (s.precision, s.recall, s.f1) == (0.5, 0.5, 0.5)
        report = compute_prf({"A": TypeCounts(1, 0, 0), "B": TypeCounts(0, 0, 1)})
        assert abs(report.micro.f1 - 2 / 3) <= 1e-9
        assert abs(report.macro.f1 - 0.5) <= 1e-9


def test_05_attention_contracts(tiny_model, corpus):
    with criterion(5, "attention rows and aggregates sum to 1"):
        rng = np.random.default_rng(5)
        sea = SEA(16, 2, rng)
        vocab = tiny_model.vocab.itos[1:]
        for _ in range(100):
            n = int(rng.integers(1, 9))
            x_e, x_r = rng.normal(size=(2, n, 16)) * rng.uniform(0.1, 5.0)
            _, _, attn_e, attn_r = cross_attend(x_e, x_r)
            for w in (attn_e.data, attn_r.data):
                assert np.all(np.abs(w.sum(axis=-1) - 1.0) <= 1e-6)
            start = int(rng.integers(0, n))
            spans = [(start, int(rng.integers(start + 1, n + 1)))]
            _, weights = sea(Tensor(rng.normal(size=(n, 16))), spans, return_weights=True)
            assert np.all(np.abs(weights.sum(axis=-1) - 1.0) <= 1e-6)
            tokens = [vocab[i] for i in rng.integers(0, len(vocab), size=n)]
            for dump in attention_dumps(tiny_model, tokens).values():
                assert np.all(np.abs(dump.matrix.sum(axis=-1) - 1.0) <= 1e-6)
                assert abs(dump.aggregate.sum() - 1.0) <= 1e-6


def test_06_equation_spot_checks():
    with criterion(6, "cross-attention hand example, zero relation classifier, joint loss sum"):
        x_e_rev, _, attn_e, _ = cross_attend(np.array([[1.0], [0.0]]), np.array([[1.0], [1.0]]))
        assert np.all(np.abs(attn_e.data - [[0.7311, 0.2689], [0.7311, 0.2689]]) <= 1e-4)
        assert np.all(np.abs(x_e_rev.data - 0.7311) <= 1e-4)

        rng = np.random.default_rng(6)
        clf = RelationClassifier(8, 3, 5, rng)
        for p in clf.parameters().values():
            p.data[...] = 0.0
        fwd, bwd = relation_logits(clf, *(rng.normal(size=s) for s in (8, 3, 8, 3, 8)))
        assert np.all(fwd.probabilities == 0.5) and np.all(bwd.probabilities == 0.5)

        parts = joint_loss(Tensor(rng.normal(size=(6, 4))), [0, 1, 2, 3, 0, 0],
                           Tensor(rng.normal(size=(3, 2))), np.array([[1, 0], [0, 0], [1, 1]]))
        assert parts.total.item() == parts.entity.item() + parts.relation.item()


def test_07_data_fidelity(tmp_path):
    with criterion(7, "dataset statistics"):
        records = make_chddi_records(CHDDI_TRAIN_SHAPE["sentences"], CHDDI_TRAIN_SHAPE["entities"],
                                     CHDDI_TRAIN_SHAPE["relations"], seed=7)
        path = tmp_path / "chddi_train.jsonl"
        path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
        stats = dataset_stats(load_chddi_json(path)[0])
        # histogram and mention count read straight off the raw records
        raw_hist: dict[str, int] = {}
        for rec in records:
            for spo in rec["spo_list"]:
                raw_hist[spo["predicate"]] = raw_hist.get(spo["predicate"], 0) + 1
        raw_mentions = sum(len({m for spo in rec["spo_list"] for m in (spo["subject"], spo["object"]["@value"])})
                           for rec in records)
        assert stats.relation_histogram == raw_hist == CHDDI_TRAIN_SHAPE["relations"]
        assert (stats.sentences, stats.entities, stats.relations) == (585, raw_mentions, 1276)
        assert raw_mentions == 1830

        real_ddi = os.environ.get("ISER_CHDDI_TRAIN")
        if real_ddi:
            stats = dataset_stats(load_chddi_json(real_ddi)[0])
            assert (stats.sentences, stats.entities, stats.relations) == (585, 1830, 1276)
            assert stats.relation_histogram == CHDDI_TRAIN_SHAPE["relations"]

        conll = os.environ.get("ISER_CONLL04_DIR")
        if conll:
            for name, expected in (("conll04_train.json", (922, 3377, 1283)), ("conll04_test.json", (231, 893, 343))):
                stats = dataset_stats(load_span_json(Path(conll) / name)[0])
                assert (stats.sentences, stats.entities, stats.relations) == expected
        else:
            print("CoNLL04 files not configured (ISER_CONLL04_DIR); that half of the check did not run")


def test_08_determinism_and_persistence(memorized, corpus, catalog, tmp_path):
    with criterion(8, "identical seeds give identical traces; checkpoints reproduce predictions"):
        cfg = ModelConfig(d=16, n_layers=1, n_heads=2, sea_heads=2, d_w=4, k=3, dropout=0.1)
        tcfg = TrainConfig(epochs=3, batch_size=2, seed=8)
        _, trace_a = train(tcfg, corpus[:8], catalog, cfg)
        _, trace_b = train(tcfg, corpus[:8], catalog, cfg)
        assert trace_a == trace_b

        model = memorized[0]
        path = save_checkpoint(tmp_path / "memorized.npz", model, MEMORIZE_TRAIN)
        loaded, _ = load_checkpoint(path)
        report_a, preds_a = evaluate_model(model, corpus)
        report_b, preds_b = evaluate_model(loaded, corpus)
        assert [(p.entities, p.relations) for p in preds_a] == [(p.entities, p.relations) for p in preds_b]
        assert report_a.to_dict() == report_b.to_dict()


def test_09_threshold_monotonicity(memorized, corpus):
    with criterion(9, "relation count non-increasing in the threshold; default 0.4"):
        assert DEFAULT_THRESHOLD == 0.4
        assert TrainConfig().threshold == 0.4
        assert run_config.load_config()["threshold"] == 0.4
        model = memorized[0]
        thetas = [round(0.1 * i, 1) for i in range(1, 10)]
        for sent in corpus:
            H = model.represent(sent.tokens).H
            spans = [(c.start, c.end) for c in enumerate_spans(len(sent), model.config.k)]
            s, w = model.span_embeddings(H, spans)
            pairs = [(i, j) for i in range(len(spans)) for j in range(len(spans)) if i != j]
            probs = T._stable_sigmoid(model.pair_logits(H, s, w, spans, pairs).data)
            counts = [int((probs >= theta).sum()) for theta in thetas]
            assert all(a >= b for a, b in zip(counts, counts[1:]))
            decoded = [len(model.predict(sent.tokens, theta).relations) for theta in thetas]
            assert all(a >= b for a, b in zip(decoded, decoded[1:]))
