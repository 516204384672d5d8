"""Small templated corpora for demos and overfitting checks."""

from __future__ import annotations

import numpy as np

from .data import EntitySpan, RelationTriple, Sentence

PEOPLE = [["John"], ["Mary", "Smith"], ["Ali"], ["Chen", "Wei"], ["Olga"], ["Pedro"], ["Ines"], ["Tom", "Baker"]]
PLACES = [["Rome"], ["New", "York"], ["Oslo"], ["Lima"], ["Cairo"], ["San", "Jose"]]
ORGS = [["Acme"], ["Globex", "Corp"], ["Initech"], ["Umbrella"], ["Hooli"]]

# (template, relations as (head slot, tail slot, type)); slots: P person, L place, O organization
TEMPLATES = [
    (["{P}", "lives", "in", "{L}", "."], [("P", "L", "Live_in")]),
    (["{P}", "works", "for", "{O}", "."], [("P", "O", "Work_for")]),
    (["{P}", "works", "for", "{O}", "in", "{L}", "."], [("P", "O", "Work_for")]),
    (["{O}", "opened", "an", "office", "in", "{L}", "."], []),
    (["{P}", ",", "who", "works", "for", "{O}", ",", "lives", "in", "{L}", "."],
     [("P", "O", "Work_for"), ("P", "L", "Live_in")]),
    (["In", "{L}", ",", "{P}", "met", "staff", "of", "{O}", "."], []),
]

SLOT_TYPES = {"P": ("Peop", PEOPLE), "L": ("Loc", PLACES), "O": ("Org", ORGS)}


def make_corpus(n_sentences: int = 20, seed: int = 0) -> list[Sentence]:
    """Templated sentences with three entity types and two relation types."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_sentences):
        template, rels = TEMPLATES[i % len(TEMPLATES)]
        tokens, entities, slot_entity = [], [], {}
        for piece in template:
            if piece.startswith("{"):
                slot = piece[1]
                etype, names = SLOT_TYPES[slot]
                name = names[rng.integers(len(names))]
                slot_entity[slot] = len(entities)
                entities.append(EntitySpan(len(tokens), len(tokens) + len(name), etype))
                tokens.extend(name)
            else:
                tokens.append(piece)
        relations = [RelationTriple(slot_entity[h], slot_entity[t], r) for h, t, r in rels]
        out.append(Sentence(tokens, entities, relations, id=f"syn-{i}"))
    return out


# counts of the drug-interaction training split: sentences, entities, relations per type
CHDDI_TRAIN_SHAPE = {
    "sentences": 585,
    "entities": 1830,
    "relations": {"Synergy": 319, "Taboo": 279, "Antagonism": 252, "Irrelevance": 187,
                  "Inhibition": 120, "Promotion": 95, "Addition": 24},
}

_NAME_CHARS = "甲乙丙丁戊己庚辛壬癸子丑寅卯辰巳午未申酉戌亥"


def make_chddi_records(n_sentences: int, n_entities: int, relation_counts: dict[str, int],
                       seed: int = 0) -> list[dict]:
    """Drug-interaction records (``text`` plus ``spo_list``) with exact totals.

    Every sentence links its drugs in a chain, so each mention takes part in
    some relation; leftover relations reverse a chain link. Drug names are
    three characters from an alphabet the filler text never uses, so each
    aligns to exactly one place.
    """
    n_rel = sum(relation_counts.values())
    chain = n_entities - n_sentences
    if n_entities < 2 * n_sentences or not chain <= n_rel <= 2 * chain:
        raise ValueError("counts admit no chain layout")
    rng = np.random.default_rng(seed)
    sizes = np.full(n_sentences, n_entities // n_sentences)
    sizes[rng.permutation(n_sentences)[:n_entities % n_sentences]] += 1
    types = [t for t, c in relation_counts.items() for _ in range(c)]
    types = [types[i] for i in rng.permutation(len(types))]
    reversals = set(rng.permutation(chain)[:n_rel - chain].tolist())

    records, link, name_id = [], 0, 0
    for size in sizes:
        names = []
        for _ in range(size):
            a, b = divmod(name_id, len(_NAME_CHARS))
            names.append("药" + _NAME_CHARS[a % len(_NAME_CHARS)] + _NAME_CHARS[b])
            name_id += 1
        spo = []
        for i in range(size - 1):
            pairs = [(names[i + 1], names[i])]
            if link in reversals:
                pairs.append((names[i], names[i + 1]))
            link += 1
            for subj, obj in pairs:
                spo.append({"predicate": types.pop(), "subject": subj, "object": {"@value": obj},
                            "subject_type": "药物", "object_type": {"@value": "药物"}})
        records.append({"text": "与".join(names) + "合用，注意观察。", "spo_list": spo})
    return records
