"""Conventional metric family: speaker / intent / action-type macro-F1,
entity macro-F1, and per-entity accuracy.

Conventions (fixed here, switchable where noted):
  - For the label metrics the macro class set is the full enumeration; a
    class with no ground truth and no predictions contributes F1 = 0 unless
    skip_absent is set. For entities the class set is the types occurring in
    ground truth anywhere in the corpus.
  - A missing prediction record counts as a false negative for every ground
    truth item of that utterance and contributes no false positives.
  - F1 with tp = 0 and fp + fn > 0 is 0; 0/0 ratios are 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from atcgrade.corpus_io import Corpus, PredictionSet
from atcgrade.matching import match_entities
from atcgrade.schema import (
    ActionType,
    EntityType,
    Intent,
    Speaker,
    WeightConfig,
)


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        if denom == 0:
            return 0.0
        return 2 * self.tp / denom


@dataclass
class ConfusionTable:
    """Per-class tp/fp/fn counts; addition is commutative, so any
    per-utterance accumulation order yields the same table."""

    counts: dict = field(default_factory=dict)

    def at(self, label) -> ClassCounts:
        if label not in self.counts:
            self.counts[label] = ClassCounts()
        return self.counts[label]


def macro_f1(table: ConfusionTable, class_set, skip_absent: bool = False) -> float:
    """Unweighted mean of per-class F1 over class_set.

    With skip_absent, classes that never occur (tp = fp = fn = 0) are
    dropped from the mean instead of contributing 0.
    """
    class_set = list(class_set)
    if not class_set:
        raise ValueError("class_set must be non-empty")
    scores = []
    for label in class_set:
        counts = table.counts.get(label, ClassCounts())
        if skip_absent and counts.tp == counts.fp == counts.fn == 0:
            continue
        scores.append(counts.f1())
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def _label_table(corpus: Corpus, preds: PredictionSet, get_gold, get_pred) -> ConfusionTable:
    table = ConfusionTable()
    for utt in corpus.utterances:
        gold = get_gold(utt)
        pred = preds.get(utt.id)
        guess = get_pred(pred) if pred is not None else None
        if guess == gold:
            table.at(gold).tp += 1
        else:
            table.at(gold).fn += 1
            if guess is not None:
                table.at(guess).fp += 1
    return table


def speaker_confusion(corpus: Corpus, preds: PredictionSet) -> ConfusionTable:
    return _label_table(corpus, preds, lambda u: u.speaker, lambda p: p.speaker)


def speaker_f1(corpus: Corpus, preds: PredictionSet) -> float:
    return macro_f1(speaker_confusion(corpus, preds), list(Speaker))


def intent_confusion(corpus: Corpus, preds: PredictionSet) -> ConfusionTable:
    return _label_table(corpus, preds, lambda u: u.intent, lambda p: p.intent)


def intent_f1(corpus: Corpus, preds: PredictionSet) -> float:
    return macro_f1(intent_confusion(corpus, preds), list(Intent))


def action_type_confusion(corpus: Corpus, preds: PredictionSet) -> ConfusionTable:
    return _label_table(
        corpus,
        preds,
        lambda u: u.action.action_type,
        lambda p: p.action.action_type if p.action else None,
    )


def action_type_f1(corpus: Corpus, preds: PredictionSet) -> float:
    return macro_f1(action_type_confusion(corpus, preds), list(ActionType))


def entity_confusion(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> ConfusionTable:
    """Corpus-wide per-entity-type counts from one-to-one span matching."""
    table = ConfusionTable()
    for utt in corpus.utterances:
        pred = preds.get(utt.id)
        pred_spans = list(pred.entities) if pred is not None else []
        result = match_entities(list(utt.entities), pred_spans, cfg)
        for gi, _, _ in result.pairs:
            table.at(utt.entities[gi].entity_type).tp += 1
        for gi in result.unmatched_gt:
            table.at(utt.entities[gi].entity_type).fn += 1
        for pi in result.unmatched_pred:
            table.at(pred_spans[pi].entity_type).fp += 1
    return table


def gt_entity_types(corpus: Corpus) -> list[EntityType]:
    """Entity types occurring in ground truth, in enumeration order."""
    present = {span.entity_type for utt in corpus.utterances for span in utt.entities}
    return [e for e in EntityType if e in present]


def entity_macro_f1(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Unweighted mean of per-type F1 over types occurring in ground truth."""
    types = gt_entity_types(corpus)
    if not types:
        return 0.0
    return macro_f1(entity_confusion(corpus, preds, cfg), types)


def per_entity_accuracy(
    corpus: Corpus, preds: PredictionSet, cfg: WeightConfig
) -> dict[EntityType, float]:
    """Matched ground-truth spans over all ground-truth spans, per type."""
    table = entity_confusion(corpus, preds, cfg)
    out: dict[EntityType, float] = {}
    for entity_type in EntityType:
        counts = table.counts.get(entity_type)
        if counts is None or counts.tp + counts.fn == 0:
            continue
        out[entity_type] = counts.tp / (counts.tp + counts.fn)
    return out
