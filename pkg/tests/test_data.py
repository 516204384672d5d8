import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iser.data import (
    DataError,
    EntitySpan,
    LabelCatalog,
    RelationTriple,
    Sentence,
    dataset_stats,
    load_dataset,
    load_span_json,
    parse_chddi_record,
    parse_span_records,
    sample_negatives,
    save_span_json,
)
from iser.synthetic import make_corpus

CHDDI_TEXT = "布美他尼片@与多巴胺合用，利尿作用加强"
CHDDI_RECORD = {
    "text": CHDDI_TEXT,
    "spo_list": [{"predicate": "协同", "subject": "多巴胺", "object": {"@value": "布美他尼片"},
                  "subject_type": "药物", "object_type": {"@value": "药物"}}],
}


def write_json(path, obj):
    path.write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")
    return path


def test_load_single_record(tmp_path):
    rec = {"tokens": ["John", "lives", "in", "Rome"],
           "entities": [{"type": "Peop", "start": 0, "end": 1}, {"type": "Loc", "start": 3, "end": 4}],
           "relations": [{"type": "Live_in", "head": 0, "tail": 1}]}
    sentences, catalog = load_span_json(write_json(tmp_path / "d.json", [rec]))
    assert len(sentences) == 1
    s = sentences[0]
    assert s.entities == [EntitySpan(0, 1, "Peop"), EntitySpan(3, 4, "Loc")]
    assert s.relations == [RelationTriple(0, 1, "Live_in")]
    assert catalog.entity_types == ["none", "Loc", "Peop"]
    assert catalog.relation_types == ["Live_in"]


@pytest.mark.parametrize("bad, where", [
    ({"entities": [{"type": "X", "start": 2, "end": 0}]}, "record 1"),
    ({"entities": [{"type": "X", "start": 0, "end": 9}]}, "record 1"),
    ({"entities": [{"type": "X", "start": 0, "end": 1}], "relations": [{"type": "R", "head": 0, "tail": 0}]},
     "record 1"),
    ({"entities": [{"type": "X", "start": 0, "end": 1}], "relations": [{"type": "R", "head": 0, "tail": 3}]},
     "record 1"),
    ({"entities": [{"type": "X", "start": "0", "end": 1}]}, "record 1"),
])
def test_invalid_record_names_index(bad, where):
    good = {"tokens": ["a", "b"], "entities": [], "relations": []}
    with pytest.raises(DataError, match=where):
        parse_span_records([good, {"tokens": ["a", "b", "c"], "relations": [], **bad}])


def test_span_json_round_trip(tmp_path):
    corpus = make_corpus(12, seed=4)
    save_span_json(corpus, tmp_path / "c.json")
    again, _ = load_span_json(tmp_path / "c.json")
    assert [(s.tokens, s.entities, s.relations) for s in again] == \
           [(s.tokens, s.entities, s.relations) for s in corpus]


def test_chddi_example_record():
    s = parse_chddi_record(CHDDI_RECORD, 0)
    assert len(CHDDI_TEXT) == 19
    assert len(s.tokens) == 19
    assert [e.type for e in s.entities] == ["drug", "drug"]
    assert len(s.relations) == 1
    rel = s.relations[0]
    head, tail = s.entities[rel.head], s.entities[rel.tail]
    assert rel.type == "协同"
    assert "".join(s.tokens[head.start:head.end]) == "多巴胺"
    assert "".join(s.tokens[tail.start:tail.end]) == "布美他尼片"


def test_chddi_missing_mention_is_an_error():
    rec = {"text": "甲乙丙", "spo_list": [{"predicate": "p", "subject": "丁", "object": {"@value": "甲"}}]}
    with pytest.raises(DataError, match="record 7"):
        parse_chddi_record(rec, 7)


def test_chddi_duplicate_mention_warns(caplog):
    rec = {"text": "甲乙甲丙", "spo_list": [{"predicate": "p", "subject": "甲", "object": {"@value": "丙"}}]}
    s = parse_chddi_record(rec, 0)
    assert s.entities[0].start == 0
    assert "more than once" in caplog.text


def test_chddi_line_file(tmp_path):
    path = tmp_path / "ddi.jsonl"
    path.write_text(json.dumps(CHDDI_RECORD, ensure_ascii=False) + "\n\n", encoding="utf-8")
    sentences, catalog = load_dataset(path, "chddi")
    assert len(sentences) == 1
    assert catalog.entity_types == ["none", "drug"]
    assert catalog.relation_types == ["协同"]


def test_unknown_dialect(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path / "x", "conll")


def test_catalog_invariants():
    cat = LabelCatalog(["Peop"], ["Kill"])
    assert cat.entity_types == ["none", "Peop"]
    with pytest.raises(DataError):
        LabelCatalog(["none", "A", "A"], [])
    with pytest.raises(DataError):
        LabelCatalog(["none"], ["none"])
    assert LabelCatalog.from_dict(cat.to_dict()) == cat


def test_stats_empty_and_counts(corpus):
    empty = dataset_stats([])
    assert (empty.sentences, empty.entities, empty.relations, empty.relation_histogram) == (0, 0, 0, {})
    report = dataset_stats(corpus)
    assert report.sentences == 20
    assert report.entities == sum(len(s.entities) for s in corpus)
    assert sum(report.relation_histogram.values()) == report.relations
    assert "sentences  20" in report.format_table()


def test_negatives_exhausted_pool(rng):
    s = Sentence(["a", "b"], [EntitySpan(0, 1, "X"), EntitySpan(1, 2, "X"), EntitySpan(0, 2, "X")])
    spans, _ = sample_negatives(s, 100, 100, rng, 5)
    assert spans == []


def test_negatives_single_reverse_pair(rng):
    s = Sentence(["a", "b", "c"], [EntitySpan(0, 1, "X"), EntitySpan(2, 3, "X")], [RelationTriple(0, 1, "R")])
    _, pairs = sample_negatives(s, 100, 100, rng, 3)
    assert pairs == [(1, 0)]


def test_negatives_cap_on_long_sentence(rng):
    s = Sentence([f"t{i}" for i in range(30)], [EntitySpan(2, 4, "X"), EntitySpan(10, 11, "X")])
    spans, _ = sample_negatives(s, 100, 100, rng, 10)
    assert sum(30 - w + 1 for w in range(1, 11)) == 255
    assert len(spans) == 100 == len(set(spans))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.integers(0, 30))
def test_negatives_never_gold(seed, k, cap):
    s = make_corpus(6, seed=seed % 97)[seed % 6]
    spans, pairs = sample_negatives(s, cap, cap, np.random.default_rng(seed), k)
    gold_spans = {(e.start, e.end) for e in s.entities}
    gold_pairs = {(r.head, r.tail) for r in s.relations}
    assert len(spans) <= cap and len(set(spans)) == len(spans)
    assert not gold_spans & set(spans)
    assert all(0 < e - b <= k for b, e in spans)
    assert not gold_pairs & set(pairs)
    assert all(h != t for h, t in pairs)
