"""
The drug-interaction annotation dialect
=======================================

Records hold raw text and subject/predicate/object triples instead of token
offsets. The loader tokenizes per character and aligns each mention to its
first occurrence in the text.
"""

import json
import tempfile
from pathlib import Path

from iser.data import dataset_stats, load_chddi_json, parse_chddi_record
from iser.synthetic import CHDDI_TRAIN_SHAPE, make_chddi_records

record = {
    "text": "布美他尼片@与多巴胺合用，利尿作用加强",
    "spo_list": [{"predicate": "协同", "subject": "多巴胺", "object": {"@value": "布美他尼片"},
                  "subject_type": "药物", "object_type": {"@value": "药物"}}],
}
sentence = parse_chddi_record(record, 0)
print(len(sentence.tokens), "tokens")
for rel in sentence.relations:
    head, tail = sentence.entities[rel.head], sentence.entities[rel.tail]
    print("".join(sentence.tokens[head.start:head.end]), f"-[{rel.type}]->",
          "".join(sentence.tokens[tail.start:tail.end]))

# A generated file with the sentence, entity and per-type relation counts of
# the published training split; the statistics come back exactly.
records = make_chddi_records(CHDDI_TRAIN_SHAPE["sentences"], CHDDI_TRAIN_SHAPE["entities"],
                             CHDDI_TRAIN_SHAPE["relations"])
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "ddi_train.jsonl"
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
    sentences, catalog = load_chddi_json(path)
print(catalog.relation_types)
print(dataset_stats(sentences).format_table())
