"""Tokenization and one-to-one alignment of predicted vs ground-truth entities.

The matching rule: a predicted entity can pair with a ground-truth entity
only when the entity types are equal and the token-level overlap of their
surface texts reaches the configured threshold (0.9 by default). Assignment
is one-to-one, greedy by descending overlap, with index-based tie-breaking
so results are deterministic.

Overlap is |multiset intersection| / max(len(a), len(b)): at threshold 0.9 a
one-token difference in a two-token value fails, which is the intended
strictness for safety-critical identifiers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from atcgrade import kernels
from atcgrade.schema import ActionAnnotation, EntitySpan, WeightConfig

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class TokenSequence:
    """Normalized tokens: case-folded, punctuation stripped, whitespace split."""

    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class MatchResult:
    """One-to-one alignment outcome over two span lists (by index)."""

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_gt: frozenset[int]
    unmatched_pred: frozenset[int]


def tokenize(text: str) -> TokenSequence:
    """Deterministic normalization; digits are kept verbatim, no stemming."""
    folded = _NON_ALNUM.sub(" ", text.casefold())
    return TokenSequence(tokens=tuple(folded.split()))


def token_overlap(a: TokenSequence, b: TokenSequence) -> float:
    """Multiset overlap in [0, 1]; both empty -> 1.0, exactly one empty -> 0.0."""
    return kernels.overlap_ratio(a.tokens, b.tokens)


def text_overlap(a: str, b: str) -> float:
    return token_overlap(tokenize(a), tokenize(b))


def match_entities(
    gt: list[EntitySpan] | tuple[EntitySpan, ...],
    pred: list[EntitySpan] | tuple[EntitySpan, ...],
    cfg: WeightConfig,
) -> MatchResult:
    """Align predicted spans to ground-truth spans one-to-one."""
    gt_types = [s.entity_type.value for s in gt]
    pred_types = [s.entity_type.value for s in pred]
    gt_tokens = [tokenize(s.text).tokens for s in gt]
    pred_tokens = [tokenize(s.text).tokens for s in pred]
    pairs = kernels.greedy_match(
        gt_types, gt_tokens, pred_types, pred_tokens, cfg.overlap_threshold
    )
    matched_gt = {gi for gi, _, _ in pairs}
    matched_pred = {pi for _, pi, _ in pairs}
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gt=frozenset(range(len(gt))) - matched_gt,
        unmatched_pred=frozenset(range(len(pred))) - matched_pred,
    )


def annotated_critical_slots(gt_action: ActionAnnotation, cfg: WeightConfig) -> list[str]:
    """Critical slots of the action that carry a non-empty ground-truth value."""
    return [
        slot
        for slot in cfg.critical_slots(gt_action.action_type)
        if gt_action.slots.get(slot, "").strip()
    ]


def match_slots(
    gt_action: ActionAnnotation,
    pred_action: ActionAnnotation | None,
    cfg: WeightConfig,
    include_unannotated: bool = False,
) -> dict[str, int]:
    """Per-slot match bits over the action's critical slots.

    By default only slots annotated in the ground truth are scored: a slot
    the utterance never instantiated contributes no denominator mass. Pass
    include_unannotated=True for the literal reading in which every critical
    slot of the action counts and unannotated ones are unearnable (m=0);
    that switch exists for sensitivity analysis only.
    """
    scored = annotated_critical_slots(gt_action, cfg)
    if include_unannotated:
        scored = list(cfg.critical_slots(gt_action.action_type))
    bits: dict[str, int] = {}
    for slot in scored:
        gt_value = gt_action.slots.get(slot, "")
        if not gt_value.strip():
            bits[slot] = 0
            continue
        pred_value = pred_action.slots.get(slot) if pred_action is not None else None
        if pred_value is None:
            bits[slot] = 0
        else:
            bits[slot] = int(text_overlap(gt_value, pred_value) >= cfg.overlap_threshold)
    return bits


def hallucinated_critical_slots(
    gt_action: ActionAnnotation,
    pred_action: ActionAnnotation | None,
    cfg: WeightConfig,
) -> list[str]:
    """Critical slots predicted with a value where the ground truth has none.

    These never enter the graded score (it is anchored to ground-truth mass)
    but they are fatal under the strict criterion.
    """
    if pred_action is None:
        return []
    out = []
    for slot in cfg.critical_slots(gt_action.action_type):
        if gt_action.slots.get(slot, "").strip():
            continue
        if pred_action.slots.get(slot, "").strip():
            out.append(slot)
    return out
