"""Strict-match counting and micro/macro precision, recall and F1."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .classifiers import Prediction
from .data import Sentence

MODES = ("ner", "re_boundaries", "re_boundaries_and_types")


@dataclass
class TypeCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "TypeCounts"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self


def gold_items(sentence: Sentence | Prediction, mode: str) -> list[tuple]:
    """Comparable tuples for a gold sentence or a prediction; the last element is the type."""
    if isinstance(sentence, Prediction):
        ents = {(s, e): t for s, e, t in sentence.entities}
        if mode == "ner":
            return [(s, e, t) for s, e, t in sentence.entities]
        out = []
        for h, t, r in sentence.relations:
            if mode == "re_boundaries_and_types":
                out.append((tuple(h), ents.get(tuple(h)), tuple(t), ents.get(tuple(t)), r))
            else:
                out.append((tuple(h), tuple(t), r))
        return out
    if mode == "ner":
        return [(e.start, e.end, e.type) for e in sentence.entities]
    out = []
    for r in sentence.relations:
        h, t = sentence.entities[r.head], sentence.entities[r.tail]
        if mode == "re_boundaries_and_types":
            out.append(((h.start, h.end), h.type, (t.start, t.end), t.type, r.type))
        else:
            out.append(((h.start, h.end), (t.start, t.end), r.type))
    return out


def match_and_count(gold, pred, mode: str = "ner") -> dict[str, TypeCounts]:
    """Per-type TP/FP/FN; each gold item can absorb at most one identical prediction."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    remaining = Counter(gold_items(gold, mode))
    counts: dict[str, TypeCounts] = {}
    for item in gold_items(pred, mode):
        c = counts.setdefault(item[-1], TypeCounts())
        if remaining[item] > 0:
            remaining[item] -= 1
            c.tp += 1
        else:
            c.fp += 1
    for item, left in remaining.items():
        if left:
            counts.setdefault(item[-1], TypeCounts()).fn += left
    return counts


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float

    def to_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf(tp: int, fp: int, fn: int) -> PRF:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f)


@dataclass
class TaskReport:
    per_type: dict[str, tuple[TypeCounts, PRF]] = field(default_factory=dict)
    micro: PRF = field(default_factory=lambda: PRF(0.0, 0.0, 0.0))
    macro: PRF = field(default_factory=lambda: PRF(0.0, 0.0, 0.0))
    totals: TypeCounts = field(default_factory=TypeCounts)

    def to_dict(self) -> dict:
        return {
            "per_type": {name: {"tp": c.tp, "fp": c.fp, "fn": c.fn, **s.to_dict()}
                         for name, (c, s) in sorted(self.per_type.items())},
            "micro": self.micro.to_dict(),
            "macro": self.macro.to_dict(),
            "totals": {"tp": self.totals.tp, "fp": self.totals.fp, "fn": self.totals.fn},
        }


def compute_prf(counts: dict[str, TypeCounts]) -> TaskReport:
    """Micro over summed counts; macro as the plain mean over types present in gold."""
    report = TaskReport()
    for name, c in counts.items():
        report.per_type[name] = (c, prf(c.tp, c.fp, c.fn))
        report.totals += c
    report.micro = prf(report.totals.tp, report.totals.fp, report.totals.fn)
    present = [s for c, s in report.per_type.values() if c.tp + c.fn > 0]
    if present:
        report.macro = PRF(*(sum(getattr(s, a) for s in present) / len(present)
                             for a in ("precision", "recall", "f1")))
    return report


@dataclass
class EvalReport:
    ner: TaskReport
    re: TaskReport
    relation_mode: str = "re_boundaries"

    def to_dict(self) -> dict:
        return {"ner": self.ner.to_dict(), "re": self.re.to_dict(), "relation_mode": self.relation_mode}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, **kw)

    def format_table(self) -> str:
        lines = []
        for title, rep in (("NER", self.ner), ("RE", self.re)):
            lines.append(f"{title:<14}{'TP':>6}{'FP':>6}{'FN':>6}{'P':>9}{'R':>9}{'F1':>9}")
            for name, (c, s) in sorted(rep.per_type.items()):
                lines.append(f"  {name:<12}{c.tp:>6}{c.fp:>6}{c.fn:>6}"
                             f"{s.precision:>9.4f}{s.recall:>9.4f}{s.f1:>9.4f}")
            t = rep.totals
            for label, s in (("micro", rep.micro), ("macro", rep.macro)):
                counts = f"{t.tp:>6}{t.fp:>6}{t.fn:>6}" if label == "micro" else " " * 18
                lines.append(f"  {label:<12}{counts}{s.precision:>9.4f}{s.recall:>9.4f}{s.f1:>9.4f}")
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"


def _merge(into: dict[str, TypeCounts], counts: dict[str, TypeCounts]):
    for name, c in counts.items():
        into.setdefault(name, TypeCounts())
        into[name] += c


def evaluate(gold_sentences, predictions, relation_mode: str = "re_boundaries") -> EvalReport:
    """Score aligned lists of gold sentences and predictions."""
    if relation_mode not in MODES[1:]:
        raise ValueError(f"relation_mode must be one of {MODES[1:]}")
    gold_sentences, predictions = list(gold_sentences), list(predictions)
    if len(gold_sentences) != len(predictions):
        raise ValueError("gold and prediction lists differ in length")
    ner: dict[str, TypeCounts] = {}
    rel: dict[str, TypeCounts] = {}
    for g, p in zip(gold_sentences, predictions):
        _merge(ner, match_and_count(g, p, "ner"))
        _merge(rel, match_and_count(g, p, relation_mode))
    return EvalReport(compute_prf(ner), compute_prf(rel), relation_mode)


def evaluate_model(model, sentences, threshold: float = 0.4, relation_mode: str = "re_boundaries"):
    preds = [model.predict(s.tokens, threshold) for s in sentences]
    return evaluate(sentences, preds, relation_mode), preds
