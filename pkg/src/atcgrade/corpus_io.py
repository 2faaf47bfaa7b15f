"""Corpus and prediction file I/O, model-output template parsing, and the
seeded synthetic corpus generator.

File container: UTF-8 JSON Lines with a format-version header record first,
then one record per line. Field names are frozen in docs/formats.md; loading
re-validates every record against the data model (including the action-type
to risk-level binding), so a corpus that loads is schema-valid by
construction.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import random
import re
from dataclasses import dataclass, field
from typing import IO, Iterable

from atcgrade import phraseology as ph
from atcgrade.schema import (
    DEFAULT_ACTION_SCHEMA,
    ActionAnnotation,
    ActionType,
    EntitySpan,
    EntityType,
    Intent,
    Prediction,
    SchemaError,
    Speaker,
    Utterance,
    WeightConfig,
    default_weight_config,
)

FORMAT_VERSION = 1
CORPUS_FORMAT = "atc-corpus"
PREDICTIONS_FORMAT = "atc-predictions"


class CorpusFormatError(ValueError):
    """Malformed corpus or prediction file; message names line and field."""


@dataclass(frozen=True)
class Corpus:
    utterances: tuple[Utterance, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.utterances)

    def by_id(self) -> dict[str, Utterance]:
        return {u.id: u for u in self.utterances}


@dataclass(frozen=True)
class PredictionSet:
    predictions: dict[str, Prediction]
    model_name: str = ""

    def get(self, utterance_id: str) -> Prediction | None:
        return self.predictions.get(utterance_id)


@dataclass(frozen=True)
class TemplateParseOutcome:
    """Best-effort parse of one model response; failures are data."""

    prediction: Prediction | None
    diagnostics: list[tuple[str, str]]


# ---------------------------------------------------------------------------
# Line-delimited container
# ---------------------------------------------------------------------------


def _iter_lines(source: str | bytes | IO) -> Iterable[str]:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
        return
    if isinstance(source, bytes):
        yield from io.StringIO(source.decode("utf-8"))
        return
    for line in source:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def _parse_records(source, expected_format: str):
    """Yield (line_number, record dict); validates the header record."""
    saw_header = False
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise CorpusFormatError(f"line {lineno}: record must be a JSON object")
        if not saw_header:
            if record.get("record") != "header":
                raise CorpusFormatError(f"line {lineno}: first record must be the format header")
            if record.get("format") != expected_format:
                raise CorpusFormatError(
                    f"line {lineno}: format {record.get('format')!r}, expected {expected_format!r}"
                )
            if record.get("version") != FORMAT_VERSION:
                raise CorpusFormatError(
                    f"line {lineno}: unsupported format version {record.get('version')!r}"
                )
            saw_header = True
            yield lineno, record
            continue
        yield lineno, record


def load_corpus(source: str | bytes | IO, cfg: WeightConfig | None = None) -> Corpus:
    """Load and validate a corpus file.

    Every record must pass schema validation, ids must be unique, and each
    utterance's stored risk level must equal the schema's level for its
    action type.
    """
    cfg = cfg or default_weight_config()
    utterances: list[Utterance] = []
    metadata: dict[str, str] = {}
    seen_ids: set[str] = set()
    saw_any = False
    for lineno, record in _parse_records(source, CORPUS_FORMAT):
        saw_any = True
        if record.get("record") == "header":
            metadata = {str(k): str(v) for k, v in (record.get("metadata") or {}).items()}
            continue
        if record.get("record") != "utterance":
            raise CorpusFormatError(f"line {lineno}: unexpected record kind {record.get('record')!r}")
        try:
            utt = Utterance.from_dict(record)
        except SchemaError as exc:
            raise CorpusFormatError(f"line {lineno}: {exc}") from None
        if utt.id in seen_ids:
            raise CorpusFormatError(f"line {lineno}: duplicate utterance id {utt.id!r}")
        seen_ids.add(utt.id)
        expected = cfg.risk_of(utt.action.action_type)
        if utt.risk_level is not expected:
            raise CorpusFormatError(
                f"line {lineno}: utterance {utt.id!r} declares risk {utt.risk_level.value}"
                f" but schema assigns {expected.value} to {utt.action.action_type.value}"
            )
        utterances.append(utt)
    if not saw_any:
        raise CorpusFormatError("empty file: missing format header")
    return Corpus(utterances=tuple(utterances), metadata=metadata)


def corpus_to_bytes(corpus: Corpus) -> bytes:
    """Canonical serialization; identical corpora produce identical bytes."""
    out = io.StringIO()
    header = {
        "record": "header",
        "format": CORPUS_FORMAT,
        "version": FORMAT_VERSION,
        "metadata": corpus.metadata,
    }
    out.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    for utt in corpus.utterances:
        out.write(json.dumps(utt.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
    return out.getvalue().encode("utf-8")


def write_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(corpus_to_bytes(corpus))


def corpus_digest(corpus: Corpus) -> str:
    return hashlib.sha256(corpus_to_bytes(corpus)).hexdigest()


def load_predictions(source: str | bytes | IO) -> PredictionSet:
    """Load a prediction file; a zero-length file is an empty set."""
    predictions: dict[str, Prediction] = {}
    model_name = ""
    for lineno, record in _parse_records(source, PREDICTIONS_FORMAT):
        if record.get("record") == "header":
            model_name = str(record.get("model_name", ""))
            continue
        if record.get("record") != "prediction":
            raise CorpusFormatError(f"line {lineno}: unexpected record kind {record.get('record')!r}")
        try:
            pred = Prediction.from_dict(record)
        except SchemaError as exc:
            raise CorpusFormatError(f"line {lineno}: {exc}") from None
        if pred.utterance_id in predictions:
            raise CorpusFormatError(
                f"line {lineno}: duplicate prediction for utterance id {pred.utterance_id!r}"
            )
        predictions[pred.utterance_id] = pred
    return PredictionSet(predictions=predictions, model_name=model_name)


def predictions_to_bytes(preds: PredictionSet) -> bytes:
    out = io.StringIO()
    header = {
        "record": "header",
        "format": PREDICTIONS_FORMAT,
        "version": FORMAT_VERSION,
        "model_name": preds.model_name,
    }
    out.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    for utterance_id in preds.predictions:
        pred = preds.predictions[utterance_id]
        out.write(json.dumps(pred.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
    return out.getvalue().encode("utf-8")


def write_predictions(preds: PredictionSet, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(predictions_to_bytes(preds))


# ---------------------------------------------------------------------------
# Model-output template parsing
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^[-*\s]*([A-Za-z_. ]+?)\s*:\s*(.*)$")
_FIELD_KEYS = {
    "speaker": "speaker",
    "intent": "intent",
    "intention": "intent",
    "action": "action",
    "slots": "slots",
    "entities": "entities",
}
_NONE_VALUES = {"", "none", "n/a", "null", "-"}


def parse_model_output(raw_text: str, utterance_id: str) -> TemplateParseOutcome:
    """Parse one model response in the canonical labeled-section template.

    Never raises: every unparseable field becomes an absent field plus a
    diagnostic. A field named in no diagnostic is populated, and vice versa;
    a blanket ("response", ...) diagnostic marks the whole response
    unusable, i.e. every field absent.
    """
    if not raw_text or not raw_text.strip():
        return TemplateParseOutcome(
            prediction=Prediction(utterance_id=utterance_id),
            diagnostics=[("response", "empty response")],
        )

    speaker: Speaker | None = None
    intent: Intent | None = None
    action_type: ActionType | None = None
    slots: dict[str, str] = {}
    entities: list[EntitySpan] = []
    seen: set[str] = set()
    # last failed parse attempt per field; reported only if the field stays
    # absent, so diagnostics always describe the final prediction
    problems: dict[str, str] = {}
    detail_diagnostics: list[tuple[str, str]] = []
    section: str | None = None
    entity_index = 0

    for line in raw_text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        match = _SECTION_RE.match(stripped)
        key = _FIELD_KEYS.get(match.group(1).strip().lower()) if match else None
        if key is not None:
            value = match.group(2).strip()
            seen.add(key)
            if key == "speaker":
                section = None
                if value.lower() in _NONE_VALUES:
                    problems["speaker"] = "no value given"
                else:
                    try:
                        speaker = Speaker(value.upper())
                    except ValueError:
                        problems["speaker"] = f"unknown speaker {value!r}"
            elif key == "intent":
                section = None
                if value.lower() in _NONE_VALUES:
                    problems["intent"] = "no value given"
                else:
                    try:
                        intent = Intent(value.upper())
                    except ValueError:
                        problems["intent"] = f"unknown intent {value!r}"
            elif key == "action":
                section = None
                if value.lower() in _NONE_VALUES:
                    problems["action"] = "no value given"
                else:
                    try:
                        action_type = ActionType(value.upper().replace(" ", "_"))
                    except ValueError:
                        problems["action"] = f"unknown action type {value!r}"
            elif key == "slots":
                section = "slots"
            elif key == "entities":
                section = "entities"
            continue
        if section == "slots" and match:
            name = match.group(1).strip().lower()
            value = match.group(2).strip()
            if value.lower() in _NONE_VALUES:
                detail_diagnostics.append((f"action.slots.{name}", "empty slot value"))
            else:
                slots[name] = value
        elif section == "entities" and match:
            name = match.group(1).strip().upper().replace(" ", "_")
            value = match.group(2).strip()
            entity_index += 1
            try:
                entities.append(EntitySpan(entity_type=EntityType(name), text=value))
            except (ValueError, SchemaError):
                detail_diagnostics.append(
                    (f"entities[{entity_index}]", f"unusable entity line {stripped!r}")
                )

    if not seen:
        return TemplateParseOutcome(
            prediction=Prediction(utterance_id=utterance_id),
            diagnostics=[("response", "no template sections recognized")],
        )
    diagnostics: list[tuple[str, str]] = []
    populated = {"speaker": speaker, "intent": intent, "action": action_type}
    for key in ("speaker", "intent", "action"):
        if populated[key] is not None:
            continue
        if key in seen:
            diagnostics.append((key, problems.get(key, "no value given")))
        else:
            diagnostics.append((key, "section not found in response"))
    if "entities" not in seen:
        diagnostics.append(("entities", "section not found in response"))
    diagnostics.extend(detail_diagnostics)
    if action_type is None and slots:
        diagnostics.append(("action.slots", "slot lines present without a parsable action"))
        slots = {}

    prediction = Prediction(
        utterance_id=utterance_id,
        speaker=speaker,
        intent=intent,
        action=ActionAnnotation(action_type=action_type, slots=slots) if action_type else None,
        entities=tuple(entities),
    )
    return TemplateParseOutcome(prediction=prediction, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

_HIGH_ACTIONS = (ActionType.HOLD, ActionType.TAXI, ActionType.GIVE_WAY)
_MEDIUM_ACTIONS = (ActionType.CONTACT, ActionType.PUSHBACK)
# UNKNOWN is deliberately not generated: an unparseable-residue action with a
# noise-proof transcript would be unfalsifiable under the strict criterion.
_LOW_ACTIONS = (ActionType.INFORM, ActionType.GREET, ActionType.STANDBY)


def generate_synthetic_corpus(
    seed: int,
    n: int,
    risk_mix: tuple[float, float, float] = (0.48, 0.26, 0.26),
) -> Corpus:
    """Deterministic schema-valid corpus whose risk composition matches risk_mix.

    Transcripts are rendered from the phrase-template bank per action type,
    using the same normalization conventions as the baseline parser, so the
    parser can reconstruct the annotations from clean transcripts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if any(p < 0 for p in risk_mix) or abs(sum(risk_mix) - 1.0) > 1e-9:
        raise ValueError(f"risk mix proportions must be >= 0 and sum to 1, got {risk_mix}")

    rng = random.Random(seed)
    counts = _apportion(n, risk_mix)
    actions: list[ActionType] = []
    for count, pool in zip(counts, (_HIGH_ACTIONS, _MEDIUM_ACTIONS, _LOW_ACTIONS)):
        actions.extend(rng.choice(pool) for _ in range(count))
    rng.shuffle(actions)

    width = max(4, len(str(n)))
    utterances = [
        _build_utterance(rng, f"u{i:0{width}d}", action)
        for i, action in enumerate(actions, start=1)
    ]
    metadata = {
        "source": "synthetic",
        "seed": str(seed),
        "risk_mix": "/".join(f"{p:g}" for p in risk_mix),
    }
    return Corpus(utterances=tuple(utterances), metadata=metadata)


def _apportion(n: int, proportions: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment; ties resolved by position."""
    raw = [p * n for p in proportions]
    base = [math.floor(r) for r in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[: n - sum(base)]:
        base[i] += 1
    return base


def _make_callsign(rng: random.Random) -> str:
    airline = rng.choice(ph.AIRLINES)
    length = rng.choice((2, 3))
    digits = str(rng.randrange(1, 10)) + "".join(
        str(rng.randrange(10)) for _ in range(length - 1)
    )
    return f"{airline} {digits}"


def _make_runway(rng: random.Random) -> str:
    designator = f"{rng.randrange(1, 37):02d}"
    if rng.random() < 0.5:
        designator += rng.choice("lrc")
    return designator


def _make_taxiway_point(rng: random.Random) -> str:
    point = rng.choice("abcdefghjkmnpqrstuvw")
    if rng.random() < 0.3:
        point += str(rng.randrange(1, 10))
    return point


def _make_boundary(rng: random.Random) -> str:
    if rng.random() < 0.5:
        return "runway " + _make_runway(rng)
    return _make_taxiway_point(rng)


def _make_gate(rng: random.Random) -> str:
    return rng.choice("abcdefg") + str(rng.randrange(1, 30))


def _build_utterance(rng: random.Random, utt_id: str, action: ActionType) -> Utterance:
    callsign = _make_callsign(rng)
    cs_spoken = ph.callsign_spoken(callsign)
    slots: dict[str, str] = {"callsign": callsign}
    body_parts: list[str] = []
    extra_entities: list[EntitySpan] = []
    readback = rng.random() < 0.4

    if action is ActionType.HOLD:
        boundary = _make_boundary(rng)
        slots["boundary"] = boundary
        verb = "holding short of" if readback else "hold short of"
        body_parts = [verb, ph.boundary_spoken(boundary)]
    elif action is ActionType.TAXI:
        runway = _make_runway(rng) if rng.random() < 0.4 else None
        route = " ".join(_make_taxiway_point(rng) for _ in range(rng.randrange(1, 4)))
        boundary = _make_boundary(rng) if rng.random() < 0.5 else None
        qualifier = rng.choice(ph.TAXI_QUALIFIERS) if rng.random() < 0.3 else None
        slots["taxiway"] = route
        body_parts = ["taxi"]
        if runway:
            slots["runway"] = runway
            body_parts += ["runway", ph.runway_spoken(runway)]
        body_parts += ["via", ph.taxiway_route_spoken(route)]
        if boundary:
            slots["boundary"] = boundary
            body_parts += ["hold short of", ph.boundary_spoken(boundary)]
        if qualifier:
            slots["qualifier"] = qualifier
            body_parts.append(qualifier)
    elif action is ActionType.GIVE_WAY:
        vehicle = rng.choice(ph.VEHICLES)
        slots["vehicle"] = vehicle
        verb = "giving way to" if readback else "give way to"
        body_parts = [verb, vehicle]
    elif action is ActionType.CONTACT:
        unit = rng.choice(ph.CONTROLLER_UNITS)
        slots["controller"] = unit
        body_parts = ["contact", unit]
        if rng.random() < 0.7:
            freq = rng.choice(ph.FREQUENCIES)
            slots["frequency"] = freq
            body_parts.append(ph.frequency_spoken(freq))
    elif action is ActionType.PUSHBACK:
        body_parts = ["pushback approved"]
        if rng.random() < 0.6:
            gate = _make_gate(rng)
            slots["gate"] = gate
            body_parts += ["gate", ph.gate_spoken(gate)]
        if rng.random() < 0.5:
            qualifier = rng.choice(ph.PUSHBACK_QUALIFIERS)
            slots["qualifier"] = qualifier
            body_parts.append(qualifier)
    elif action is ActionType.STANDBY:
        body_parts = ["standing by" if readback else "standby"]
    elif action is ActionType.INFORM:
        unit = rng.choice(ph.CONTROLLER_UNITS)
        phrase = rng.choice(ph.INFORM_PHRASES)
        slots["controller"] = unit
        extra_entities.append(EntitySpan(EntityType.REPORT, phrase))
        transcript = f"{unit} {cs_spoken} {phrase}"
        return _assemble(utt_id, transcript, Speaker.PILOT, Intent.INFORM, action, slots, extra_entities)
    elif action is ActionType.GREET:
        unit = rng.choice(ph.CONTROLLER_UNITS)
        greeting = rng.choice(ph.GREETINGS)
        slots["controller"] = unit
        extra_entities.append(EntitySpan(EntityType.GREET, greeting))
        transcript = f"{greeting} {unit} {cs_spoken}"
        return _assemble(utt_id, transcript, Speaker.PILOT, Intent.GREET, action, slots, extra_entities)
    else:  # pragma: no cover - UNKNOWN is never drawn
        raise ValueError(f"no template bank for {action}")

    body = " ".join(body_parts)
    if readback:
        transcript = f"{body} {cs_spoken}"
        speaker, intent = Speaker.PILOT, Intent.READBACK
    else:
        transcript = f"{cs_spoken} {body}"
        speaker, intent = Speaker.CONTROLLER, Intent.INSTRUCTION
    return _assemble(utt_id, transcript, speaker, intent, action, slots, extra_entities)


_SLOT_ENTITY_ORDER = (
    ("callsign", EntityType.CALLSIGN),
    ("taxiway", EntityType.TAXIWAY),
    ("runway", EntityType.RUNWAY),
    ("boundary", EntityType.CONDITION),
    ("vehicle", EntityType.VEHICLE),
    ("frequency", EntityType.FREQUENCY),
    ("controller", EntityType.CONTROLLER),
    ("gate", EntityType.GATE),
    ("qualifier", EntityType.QUALIFIER),
)


def _assemble(
    utt_id: str,
    transcript: str,
    speaker: Speaker,
    intent: Intent,
    action: ActionType,
    slots: dict[str, str],
    extra_entities: list[EntitySpan],
) -> Utterance:
    entities = [
        EntitySpan(entity_type, slots[name])
        for name, entity_type in _SLOT_ENTITY_ORDER
        if name in slots
    ]
    entities.extend(extra_entities)
    return Utterance(
        id=utt_id,
        transcript=transcript,
        speaker=speaker,
        intent=intent,
        action=ActionAnnotation(action_type=action, slots=slots),
        entities=tuple(entities),
        risk_level=DEFAULT_ACTION_SCHEMA[action].risk,
    )
