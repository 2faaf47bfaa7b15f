"""Consequence-aware metric family.

Per-utterance score: risk coefficient times the weighted fraction of matched
critical slots. The coefficient is 1 when the action type is predicted
correctly, otherwise 1 minus the action's risk coefficient, so a missed
high-risk action type zeroes the utterance regardless of slot quality. Slot
weights are the entity weights of each slot's mapped entity category.

Sums over critical slots range over the slots annotated in the ground truth
(a slot the utterance never instantiated contributes no denominator mass);
a predicted value for a ground-truth-absent critical slot is a
hallucination, which the graded score ignores and the strict criterion
treats as fatal.

Corpus aggregates use math.fsum, so every aggregate is exactly invariant
under corpus reordering and parallel reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from atcgrade.classification_metrics import entity_confusion, gt_entity_types
from atcgrade.corpus_io import Corpus, PredictionSet
from atcgrade.matching import (
    hallucinated_critical_slots,
    match_entities,
    match_slots,
)
from atcgrade.schema import (
    ActionType,
    Prediction,
    RiskLevel,
    Utterance,
    WeightConfig,
)


@dataclass(frozen=True)
class UtteranceScore:
    utterance_id: str
    type_correct: int
    r_coef: float
    slot_weighted_fraction: float
    score: float
    strict: int
    hallucinated_slots: int


@dataclass(frozen=True)
class RiskReport:
    """All consequence-aware aggregates for one (corpus, predictions) pair."""

    rw_er: float
    risk_ner_f1: float
    action_risk_score: float
    act_wt: float
    act_macro: float
    risk_strict: float
    per_risk_level: dict[RiskLevel, tuple[float, float]]
    per_action: dict[ActionType, float]

    def to_dict(self) -> dict:
        return {
            "rw_er": self.rw_er,
            "risk_ner_f1": self.risk_ner_f1,
            "action_risk_score": self.action_risk_score,
            "act_wt": self.act_wt,
            "act_macro": self.act_macro,
            "risk_strict": self.risk_strict,
            "per_risk_level": {
                level.value: {"type_accuracy": acc[0], "slot_accuracy": acc[1]}
                for level, acc in self.per_risk_level.items()
            },
            "per_action": {a.value: s for a, s in self.per_action.items()},
        }


def score_utterance(
    gt: Utterance, pred: Prediction | None, cfg: WeightConfig
) -> UtteranceScore:
    """Consequence-aware correctness score for one utterance.

    An absent prediction scores as a full miss: wrong type, no slot matched.
    When the ground truth annotates no critical slot, the slot fraction is
    vacuously 1.0 and correctness reduces to the action type (plus the
    no-hallucination requirement for the strict bit).
    """
    pred_action = pred.action if pred is not None else None
    type_correct = int(
        pred_action is not None and pred_action.action_type is gt.action.action_type
    )
    bits = match_slots(gt.action, pred_action, cfg)
    weights = {slot: cfg.slot_weight(gt.action.action_type, slot) for slot in bits}
    denominator = math.fsum(weights.values())
    if denominator > 0.0:
        fraction = math.fsum(weights[s] for s in bits if bits[s]) / denominator
    else:
        fraction = 1.0
    r_coef = 1.0 if type_correct else cfg.risk_of(gt.action.action_type).miss_coefficient
    hallucinated = len(hallucinated_critical_slots(gt.action, pred_action, cfg))
    strict = int(
        type_correct == 1 and all(bits.values()) and hallucinated == 0
    )
    return UtteranceScore(
        utterance_id=gt.id,
        type_correct=type_correct,
        r_coef=r_coef,
        slot_weighted_fraction=fraction,
        score=r_coef * fraction,
        strict=strict,
        hallucinated_slots=hallucinated,
    )


def score_corpus(
    corpus: Corpus, preds: PredictionSet, cfg: WeightConfig
) -> list[UtteranceScore]:
    return [score_utterance(utt, preds.get(utt.id), cfg) for utt in corpus.utterances]


def rw_er(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Risk-weighted entity recall over all ground-truth entities."""
    hit_weights: list[float] = []
    gt_weights: list[float] = []
    for utt in corpus.utterances:
        pred = preds.get(utt.id)
        pred_spans = list(pred.entities) if pred is not None else []
        result = match_entities(list(utt.entities), pred_spans, cfg)
        matched = {gi for gi, _, _ in result.pairs}
        for gi, span in enumerate(utt.entities):
            w = cfg.entity_weights[span.entity_type]
            gt_weights.append(w)
            if gi in matched:
                hit_weights.append(w)
    total = math.fsum(gt_weights)
    if total <= 0.0:
        raise ValueError("no weighted ground truth")
    return math.fsum(hit_weights) / total


def risk_weighted_entity_f1(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Weighted mean of per-type F1, weights normalized over GT-occurring types."""
    types = gt_entity_types(corpus)
    weights = [cfg.entity_weights[t] for t in types]
    total = math.fsum(weights)
    if total <= 0.0:
        raise ValueError("no weighted ground truth")
    table = entity_confusion(corpus, preds, cfg)
    weighted = []
    for entity_type, w in zip(types, weights):
        counts = table.counts.get(entity_type)
        weighted.append(w * counts.f1() if counts is not None else 0.0)
    return math.fsum(weighted) / total


def action_risk_score(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Mean consequence-aware score over all utterances."""
    scores = score_corpus(corpus, preds, cfg)
    if not scores:
        raise ValueError("empty corpus")
    return math.fsum(s.score for s in scores) / len(scores)


def act_wt(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Mean weighted slot fraction with the type penalty removed."""
    scores = score_corpus(corpus, preds, cfg)
    if not scores:
        raise ValueError("empty corpus")
    return math.fsum(s.slot_weighted_fraction for s in scores) / len(scores)


def risk_strict(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Fail-safe criterion: fraction of utterances with full correctness."""
    scores = score_corpus(corpus, preds, cfg)
    if not scores:
        raise ValueError("empty corpus")
    return sum(s.strict for s in scores) / len(scores)


def act_macro(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> float:
    """Unweighted slot-level macro-F1 over slot categories occurring in GT.

    tp: matched GT slot instances; fn: missed GT slot instances;
    fp: hallucinated critical-slot instances.
    """
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    gt_categories: set[str] = set()
    for utt in corpus.utterances:
        pred = preds.get(utt.id)
        pred_action = pred.action if pred is not None else None
        bits = match_slots(utt.action, pred_action, cfg)
        for slot, bit in bits.items():
            gt_categories.add(slot)
            if bit:
                tp[slot] = tp.get(slot, 0) + 1
            else:
                fn[slot] = fn.get(slot, 0) + 1
        for slot in hallucinated_critical_slots(utt.action, pred_action, cfg):
            fp[slot] = fp.get(slot, 0) + 1
    if not gt_categories:
        return 0.0
    f1s = []
    for slot in sorted(gt_categories):
        denom = 2 * tp.get(slot, 0) + fp.get(slot, 0) + fn.get(slot, 0)
        f1s.append(2 * tp.get(slot, 0) / denom if denom else 0.0)
    return math.fsum(f1s) / len(f1s)


def risk_stratified(
    corpus: Corpus, preds: PredictionSet, cfg: WeightConfig
) -> dict[RiskLevel, tuple[float, float]]:
    """Per risk level: (action-type accuracy, critical-slot accuracy).

    Slot accuracy is matched GT critical-slot instances over all GT
    critical-slot instances within the stratum; a stratum whose utterances
    annotate no critical slot at all is vacuously 1.0.
    """
    type_hits: dict[RiskLevel, int] = {}
    type_totals: dict[RiskLevel, int] = {}
    slot_hits: dict[RiskLevel, int] = {}
    slot_totals: dict[RiskLevel, int] = {}
    for utt in corpus.utterances:
        level = utt.risk_level
        pred = preds.get(utt.id)
        pred_action = pred.action if pred is not None else None
        type_totals[level] = type_totals.get(level, 0) + 1
        if pred_action is not None and pred_action.action_type is utt.action.action_type:
            type_hits[level] = type_hits.get(level, 0) + 1
        bits = match_slots(utt.action, pred_action, cfg)
        slot_totals[level] = slot_totals.get(level, 0) + len(bits)
        slot_hits[level] = slot_hits.get(level, 0) + sum(bits.values())
    out: dict[RiskLevel, tuple[float, float]] = {}
    for level in RiskLevel:
        if level not in type_totals:
            continue
        type_acc = type_hits.get(level, 0) / type_totals[level]
        total_slots = slot_totals.get(level, 0)
        slot_acc = slot_hits.get(level, 0) / total_slots if total_slots else 1.0
        out[level] = (type_acc, slot_acc)
    return out


def per_action_scores(
    corpus: Corpus, preds: PredictionSet, cfg: WeightConfig
) -> dict[ActionType, float]:
    """Mean consequence-aware score per ground-truth action type."""
    sums: dict[ActionType, list[float]] = {}
    for utt in corpus.utterances:
        s = score_utterance(utt, preds.get(utt.id), cfg)
        sums.setdefault(utt.action.action_type, []).append(s.score)
    return {
        action: math.fsum(scores) / len(scores)
        for action, scores in sorted(sums.items(), key=lambda kv: kv[0].value)
    }


def build_risk_report(corpus: Corpus, preds: PredictionSet, cfg: WeightConfig) -> RiskReport:
    """Compute the full consequence-aware family in one pass."""
    scores = score_corpus(corpus, preds, cfg)
    if not scores:
        raise ValueError("empty corpus")
    n = len(scores)
    return RiskReport(
        rw_er=rw_er(corpus, preds, cfg),
        risk_ner_f1=risk_weighted_entity_f1(corpus, preds, cfg),
        action_risk_score=math.fsum(s.score for s in scores) / n,
        act_wt=math.fsum(s.slot_weighted_fraction for s in scores) / n,
        act_macro=act_macro(corpus, preds, cfg),
        risk_strict=sum(s.strict for s in scores) / n,
        per_risk_level=risk_stratified(corpus, preds, cfg),
        per_action=per_action_scores(corpus, preds, cfg),
    )
