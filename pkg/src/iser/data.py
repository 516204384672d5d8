"""Dataset types, the two annotation dialects, statistics and negative sampling.

Span JSON is the format distributed with common joint-extraction benchmarks::

    [{"tokens": [...], "entities": [{"type", "start", "end"}],
      "relations": [{"type", "head", "tail"}]}, ...]

with ``end`` exclusive and ``head``/``tail`` indexing the entity list. The
drug-interaction dialect has one JSON object per line::

    {"text": ..., "spo_list": [{"predicate", "subject", "object": {"@value"},
                                "subject_type", "object_type": {"@value"}}]}

and is tokenized one character per token.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

NONE_TYPE = "none"
DRUG_TYPE = "drug"


class DataError(ValueError):
    """A dataset record violates the format or its invariants."""


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    type: str

    @property
    def width(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class RelationTriple:
    head: int
    tail: int
    type: str


@dataclass
class Sentence:
    tokens: list[str]
    entities: list[EntitySpan] = field(default_factory=list)
    relations: list[RelationTriple] = field(default_factory=list)
    id: str = ""

    def __len__(self):
        return len(self.tokens)

    def validate(self):
        n = len(self.tokens)
        for e in self.entities:
            if not 0 <= e.start < e.end <= n:
                raise DataError(f"entity ({e.start}, {e.end}) outside sentence of {n} tokens")
        for r in self.relations:
            for idx in (r.head, r.tail):
                if not 0 <= idx < len(self.entities):
                    raise DataError(f"relation endpoint {idx} is not a valid entity index")
            if r.head == r.tail:
                raise DataError(f"relation {r.type!r} links entity {r.head} to itself")


@dataclass
class LabelCatalog:
    entity_types: list[str]
    relation_types: list[str]

    def __post_init__(self):
        if not self.entity_types or self.entity_types[0] != NONE_TYPE:
            self.entity_types = [NONE_TYPE] + [t for t in self.entity_types if t != NONE_TYPE]
        if len(set(self.entity_types)) != len(self.entity_types):
            raise DataError("duplicate entity type names")
        if len(set(self.relation_types)) != len(self.relation_types):
            raise DataError("duplicate relation type names")
        if NONE_TYPE in self.relation_types:
            raise DataError(f"{NONE_TYPE!r} is reserved for entity types")

    @classmethod
    def from_sentences(cls, sentences) -> "LabelCatalog":
        ents = sorted({e.type for s in sentences for e in s.entities} - {NONE_TYPE})
        rels = sorted({r.type for s in sentences for r in s.relations})
        return cls([NONE_TYPE] + ents, rels)

    def merge(self, other: "LabelCatalog") -> "LabelCatalog":
        ents = self.entity_types + [t for t in other.entity_types if t not in self.entity_types]
        rels = self.relation_types + [t for t in other.relation_types if t not in self.relation_types]
        return LabelCatalog(ents, rels)

    def entity_index(self, name: str) -> int:
        return self.entity_types.index(name)

    def relation_index(self, name: str) -> int:
        return self.relation_types.index(name)

    def to_dict(self) -> dict:
        return {"entity_types": list(self.entity_types), "relation_types": list(self.relation_types)}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelCatalog":
        return cls(list(d["entity_types"]), list(d["relation_types"]))


# ---------------------------------------------------------------------------
# span JSON


def _require(record: dict, key: str, kind, where: str):
    if key not in record:
        raise DataError(f"{where}: missing field {key!r}")
    value = record[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise DataError(f"{where}: field {key!r} has type {type(value).__name__}")
    return value


def parse_span_records(records) -> list[Sentence]:
    if not isinstance(records, list):
        raise DataError("span JSON must be an array of records")
    sentences = []
    for i, rec in enumerate(records):
        where = f"record {i}"
        if not isinstance(rec, dict):
            raise DataError(f"{where}: expected an object")
        tokens = _require(rec, "tokens", list, where)
        if not all(isinstance(t, str) for t in tokens):
            raise DataError(f"{where}: tokens must be strings")
        entities = []
        for j, e in enumerate(_require(rec, "entities", list, where)):
            ew = f"{where}, entity {j}"
            entities.append(EntitySpan(_require(e, "start", int, ew), _require(e, "end", int, ew),
                                       _require(e, "type", str, ew)))
        relations = []
        for j, r in enumerate(rec.get("relations", [])):
            rw = f"{where}, relation {j}"
            relations.append(RelationTriple(_require(r, "head", int, rw), _require(r, "tail", int, rw),
                                            _require(r, "type", str, rw)))
        sent = Sentence(list(tokens), entities, relations, id=str(rec.get("orig_id", i)))
        try:
            sent.validate()
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
        sentences.append(sent)
    return sentences


def load_span_json(path) -> tuple[list[Sentence], LabelCatalog]:
    with open(path, encoding="utf-8") as fh:
        records = json.load(fh)
    sentences = parse_span_records(records)
    return sentences, LabelCatalog.from_sentences(sentences)


def sentence_to_record(sentence: Sentence) -> dict:
    return {
        "tokens": list(sentence.tokens),
        "entities": [{"type": e.type, "start": e.start, "end": e.end} for e in sentence.entities],
        "relations": [{"type": r.type, "head": r.head, "tail": r.tail} for r in sentence.relations],
    }


def save_span_json(sentences, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([sentence_to_record(s) for s in sentences], fh, ensure_ascii=False, indent=1)


# ---------------------------------------------------------------------------
# drug-interaction (spo_list) dialect


def _value(field_value):
    if isinstance(field_value, dict):
        return field_value.get("@value")
    return field_value


def parse_chddi_record(rec: dict, index: int) -> Sentence:
    where = f"record {index}"
    if not isinstance(rec, dict) or not isinstance(rec.get("text"), str):
        raise DataError(f"{where}: expected an object with a string 'text'")
    text = rec["text"]
    spo_list = rec.get("spo_list", [])
    if not isinstance(spo_list, list):
        raise DataError(f"{where}: 'spo_list' must be a list")
    entities: list[EntitySpan] = []
    index_of: dict[tuple[int, int], int] = {}
    relations = []

    def align(mention) -> int:
        if not isinstance(mention, str) or not mention:
            raise DataError(f"{where}: entity mention must be a non-empty string")
        start = text.find(mention)
        if start < 0:
            raise DataError(f"{where}: mention {mention!r} not found in text")
        if text.find(mention, start + 1) >= 0:
            logger.warning("%s: mention %r occurs more than once; using first occurrence", where, mention)
        key = (start, start + len(mention))
        if key not in index_of:
            index_of[key] = len(entities)
            entities.append(EntitySpan(key[0], key[1], DRUG_TYPE))
        return index_of[key]

    for j, spo in enumerate(spo_list):
        if not isinstance(spo, dict) or not isinstance(spo.get("predicate"), str):
            raise DataError(f"{where}, triple {j}: missing 'predicate'")
        head = align(_value(spo.get("subject")))
        tail = align(_value(spo.get("object")))
        if head == tail:
            raise DataError(f"{where}, triple {j}: subject and object align to the same span")
        rel = RelationTriple(head, tail, spo["predicate"])
        if rel not in relations:
            relations.append(rel)
    return Sentence(list(text), entities, relations, id=str(rec.get("id", index)))


def load_chddi_json(path) -> tuple[list[Sentence], LabelCatalog]:
    """Read the line-delimited dialect (a single JSON array is accepted too)."""
    raw = Path(path).read_text(encoding="utf-8").strip()
    if raw.startswith("["):
        records = json.loads(raw)
    else:
        records = []
        for lineno, line in enumerate(raw.splitlines()):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"line {lineno + 1}: {exc}") from None
    sentences = [parse_chddi_record(rec, i) for i, rec in enumerate(records)]
    rels = sorted({r.type for s in sentences for r in s.relations})
    return sentences, LabelCatalog([NONE_TYPE, DRUG_TYPE], rels)


def load_dataset(path, dialect: str):
    if dialect == "span_json":
        return load_span_json(path)
    if dialect == "chddi":
        return load_chddi_json(path)
    raise DataError(f"unknown dataset dialect {dialect!r}")


# ---------------------------------------------------------------------------
# statistics


@dataclass
class StatsReport:
    sentences: int = 0
    entities: int = 0
    relations: int = 0
    relation_histogram: dict[str, int] = field(default_factory=dict)
    entity_histogram: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentences,
            "entities": self.entities,
            "relations": self.relations,
            "relation_histogram": dict(self.relation_histogram),
            "entity_histogram": dict(self.entity_histogram),
        }

    def format_table(self) -> str:
        lines = [f"sentences  {self.sentences}", f"entities   {self.entities}",
                 f"relations  {self.relations}", "", "relation type  count"]
        for name, count in sorted(self.relation_histogram.items(), key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"{name}  {count}")
        return "\n".join(lines)


def dataset_stats(sentences) -> StatsReport:
    rel_hist: Counter = Counter()
    ent_hist: Counter = Counter()
    report = StatsReport()
    for s in sentences:
        report.sentences += 1
        report.entities += len(s.entities)
        report.relations += len(s.relations)
        rel_hist.update(r.type for r in s.relations)
        ent_hist.update(e.type for e in s.entities)
    report.relation_histogram = dict(rel_hist)
    report.entity_histogram = dict(ent_hist)
    return report


# ---------------------------------------------------------------------------
# negative sampling


def sample_negatives(sentence: Sentence, max_neg_entities: int, max_neg_relations: int,
                     rng: np.random.Generator, max_width: int):
    """Draw non-gold spans and non-gold ordered entity pairs without replacement.

    Returns ``(spans, pairs)``: ``spans`` is a list of ``(start, end)`` tuples of
    width at most ``max_width`` that match no gold entity boundary; ``pairs`` is
    a list of ``(head, tail)`` entity indices with no gold relation in that
    direction.
    """
    n = len(sentence.tokens)
    gold = {(e.start, e.end) for e in sentence.entities}
    pool = [(s, s + w) for w in range(1, min(max_width, n) + 1) for s in range(n - w + 1)
            if (s, s + w) not in gold]
    take = min(max_neg_entities, len(pool))
    picks = rng.choice(len(pool), size=take, replace=False) if take else []
    spans = [pool[i] for i in picks]

    linked = {(r.head, r.tail) for r in sentence.relations}
    m = len(sentence.entities)
    pair_pool = [(i, j) for i in range(m) for j in range(m) if i != j and (i, j) not in linked]
    take = min(max_neg_relations, len(pair_pool))
    picks = rng.choice(len(pair_pool), size=take, replace=False) if take else []
    pairs = [pair_pool[i] for i in picks]
    return spans, pairs
