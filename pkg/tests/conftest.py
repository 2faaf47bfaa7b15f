import random

import pytest

from atcgrade.corpus_io import PredictionSet, generate_synthetic_corpus
from atcgrade.schema import (
    ActionAnnotation,
    ActionType,
    EntitySpan,
    EntityType,
    Intent,
    Prediction,
    Speaker,
    Utterance,
    default_weight_config,
)


@pytest.fixture(scope="session")
def cfg():
    return default_weight_config()


def make_utterance(
    utt_id="u1",
    action=ActionType.HOLD,
    slots=None,
    entities=None,
    transcript="",
    speaker=Speaker.CONTROLLER,
    intent=Intent.INSTRUCTION,
):
    cfg = default_weight_config()
    return Utterance(
        id=utt_id,
        transcript=transcript,
        speaker=speaker,
        intent=intent,
        action=ActionAnnotation(action_type=action, slots=slots or {}),
        entities=tuple(entities or ()),
        risk_level=cfg.risk_of(action),
    )


def make_prediction(utt, action=None, slots=None, entities=None, speaker=None, intent=None,
                    latency=None, drop_action=False):
    if drop_action:
        annotation = None
    else:
        annotation = ActionAnnotation(
            action_type=action or utt.action.action_type,
            slots=dict(utt.action.slots) if slots is None else slots,
        )
    return Prediction(
        utterance_id=utt.id,
        speaker=speaker,
        intent=intent,
        action=annotation,
        entities=tuple(utt.entities) if entities is None else tuple(entities),
        latency_seconds=latency,
    )


def perfect_predictions(corpus, model_name="perfect"):
    preds = {}
    for utt in corpus.utterances:
        preds[utt.id] = Prediction(
            utterance_id=utt.id,
            speaker=utt.speaker,
            intent=utt.intent,
            action=ActionAnnotation(utt.action.action_type, dict(utt.action.slots)),
            entities=tuple(utt.entities),
        )
    return PredictionSet(predictions=preds, model_name=model_name)


def _corrupt_text(value, rng):
    tokens = value.split()
    mode = rng.randrange(3)
    if mode == 0 and tokens:
        tokens[rng.randrange(len(tokens))] = rng.choice(["zzz", "qqq", "xx7"])
    elif mode == 1:
        tokens.append(rng.choice(["zzz", "extra", "blah"]))
    elif tokens:
        tokens = tokens[:-1]
    return " ".join(tokens) if tokens else "zzz"


def mutate_predictions(corpus, seed, cfg, model_name="mutated"):
    """Seeded noisy predictions exercising every scoring path: missing
    records, type errors, slot omissions/corruptions, hallucinated critical
    slots, entity drops/corruptions/spurious additions, label flips."""
    rng = random.Random(seed)
    preds = {}
    for utt in corpus.utterances:
        if rng.random() < 0.08:
            continue
        if rng.random() < 0.05:
            preds[utt.id] = Prediction(utterance_id=utt.id)
            continue

        roll = rng.random()
        if roll < 0.18:
            action_type = rng.choice(list(ActionType))
        else:
            action_type = utt.action.action_type

        slots = {}
        for name, value in utt.action.slots.items():
            r = rng.random()
            if r < 0.15:
                continue
            if r < 0.35:
                slots[name] = _corrupt_text(value, rng)
            else:
                slots[name] = value
        for name in cfg.critical_slots(utt.action.action_type):
            if name not in utt.action.slots and rng.random() < 0.15:
                slots[name] = "spurious value"

        entities = []
        for span in utt.entities:
            r = rng.random()
            if r < 0.15:
                continue
            if r < 0.3:
                entities.append(EntitySpan(span.entity_type, _corrupt_text(span.text, rng)))
            elif r < 0.35:
                other = rng.choice([e for e in EntityType if e is not EntityType.OUTSIDE])
                entities.append(EntitySpan(other, span.text))
            else:
                entities.append(span)
        if rng.random() < 0.2:
            extra_type = rng.choice([e for e in EntityType if e is not EntityType.OUTSIDE])
            entities.append(EntitySpan(extra_type, "phantom " + str(rng.randrange(100))))
        rng.shuffle(entities)

        speaker = utt.speaker if rng.random() < 0.75 else rng.choice(list(Speaker) + [None])
        intent = utt.intent if rng.random() < 0.7 else rng.choice(list(Intent) + [None])
        latency = round(rng.uniform(0.2, 9.0), 3) if rng.random() < 0.5 else None

        preds[utt.id] = Prediction(
            utterance_id=utt.id,
            speaker=speaker,
            intent=intent,
            action=ActionAnnotation(action_type=action_type, slots=slots),
            entities=tuple(entities),
            latency_seconds=latency,
        )
    return PredictionSet(predictions=preds, model_name=model_name)


def small_random_corpus(seed, max_n=20):
    rng = random.Random(seed * 7919 + 13)
    n = rng.randrange(1, max_n + 1)
    return generate_synthetic_corpus(seed=seed, n=n)
