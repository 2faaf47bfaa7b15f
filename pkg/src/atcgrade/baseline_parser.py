"""Deterministic grammar-driven baseline parser for ground-control transcripts.

Converts a raw transcript into a Prediction (speaker, intent, action type,
critical slots, entity spans) using the shared phraseology conventions:
callsigns are an airline name followed by spoken digits, taxiways are
phonetic letters with optional digits after "via", runways are "runway" plus
spoken digits and an optional side word, boundaries follow "hold short of",
frequencies use the spoken-decimal grammar.

Extraction never fails: anything unrecognized degrades to an UNKNOWN action
with whatever slots were still recoverable. Action-type triggers are checked
in a fixed priority order in which TAXI outranks HOLD, so a taxi clearance
with a hold-short boundary parses as TAXI with a boundary slot.

Speaker is emitted only when an addressing pattern identifies the role:
a unit vocative ("ground, ...") marks a pilot, a callsign-first instruction
marks a controller, a callsign-final readback marks a pilot. Otherwise the
field stays absent and scores as a miss.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO

import yaml

from atcgrade import phraseology as ph
from atcgrade.corpus_io import Corpus, PredictionSet
from atcgrade.risk_scoring import RiskReport, build_risk_report
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
    WeightConfig,
)

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def _phrases(items) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(p.split()) for p in items)


@dataclass(frozen=True)
class PhraseLexicon:
    """Closed vocabulary driving both recognition and normalization."""

    callsign_airline_map: dict[str, str]
    phonetic_alphabet: dict[str, str]
    number_words: dict[str, str]
    action_trigger_patterns: dict[ActionType, tuple[tuple[str, ...], ...]]
    controller_units: tuple[str, ...] = ph.CONTROLLER_UNITS
    vehicles: tuple[tuple[str, ...], ...] = _phrases(ph.VEHICLES)
    qualifiers: tuple[tuple[str, ...], ...] = _phrases(ph.TAXI_QUALIFIERS + ph.PUSHBACK_QUALIFIERS)
    greetings: tuple[tuple[str, ...], ...] = _phrases(ph.GREETINGS)
    inform_phrases: tuple[tuple[str, ...], ...] = _phrases(ph.INFORM_PHRASES)
    runway_sides: dict[str, str] = field(default_factory=lambda: dict(ph.RUNWAY_SIDE_WORDS))

    def validate(self) -> None:
        letters = set(self.phonetic_alphabet.values())
        if letters != set("abcdefghijklmnopqrstuvwxyz"):
            raise SchemaError("phonetic alphabet must cover exactly the 26 letters")
        digits = set(self.number_words.values())
        if digits != set("0123456789") or "niner" not in self.number_words:
            raise SchemaError("number words must cover 0-9 including 'niner'")


# Priority order: first trigger hit wins. TAXI precedes HOLD so that a taxi
# clearance carrying a hold-short boundary stays a TAXI action.
_TRIGGER_PRIORITY: tuple[tuple[ActionType, tuple[str, ...]], ...] = (
    (ActionType.TAXI, ("taxi",)),
    (ActionType.PUSHBACK, ("pushback approved", "push and start approved")),
    (ActionType.GIVE_WAY, ("give way", "giving way")),
    (ActionType.CONTACT, ("contact",)),
    (ActionType.HOLD, ("hold short", "holding short")),
    (ActionType.STANDBY, ("standby", "standing by")),
    (ActionType.GREET, ph.GREETINGS),
    (ActionType.INFORM, ph.INFORM_PHRASES),
)


def default_lexicon() -> PhraseLexicon:
    lexicon = PhraseLexicon(
        callsign_airline_map={name: name for name in ph.AIRLINES},
        phonetic_alphabet=dict(ph.PHONETIC_ALPHABET),
        number_words=dict(ph.DIGIT_WORDS),
        action_trigger_patterns={
            action: _phrases(patterns) for action, patterns in _TRIGGER_PRIORITY
        },
    )
    lexicon.validate()
    return lexicon


def load_lexicon(source: str | IO[str]) -> PhraseLexicon:
    """Load a lexicon from a YAML file; unspecified sections keep defaults."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    else:
        tree = yaml.safe_load(source)
    if not isinstance(tree, dict):
        raise SchemaError("lexicon file must contain a mapping")
    base = default_lexicon()
    triggers = base.action_trigger_patterns
    if "action_trigger_patterns" in tree:
        triggers = {}
        for name, patterns in tree["action_trigger_patterns"].items():
            triggers[ActionType(name)] = _phrases(patterns)
    lexicon = PhraseLexicon(
        callsign_airline_map=dict(tree.get("callsign_airline_map", base.callsign_airline_map)),
        phonetic_alphabet=dict(tree.get("phonetic_alphabet", base.phonetic_alphabet)),
        number_words=dict(tree.get("number_words", base.number_words)),
        action_trigger_patterns=triggers,
        controller_units=tuple(tree.get("controller_units", base.controller_units)),
        vehicles=_phrases(tree["vehicles"]) if "vehicles" in tree else base.vehicles,
        qualifiers=_phrases(tree["qualifiers"]) if "qualifiers" in tree else base.qualifiers,
        greetings=_phrases(tree["greetings"]) if "greetings" in tree else base.greetings,
        inform_phrases=(
            _phrases(tree["inform_phrases"]) if "inform_phrases" in tree else base.inform_phrases
        ),
        runway_sides=dict(tree.get("runway_sides", base.runway_sides)),
    )
    lexicon.validate()
    return lexicon


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class ParseTrace:
    matched_rules: tuple[TraceEntry, ...]


class _Scanner:
    """Token stream with consumption marks and character spans."""

    def __init__(self, transcript: str):
        lowered = transcript.lower()
        self.tokens: list[str] = []
        self.spans: list[tuple[int, int]] = []
        for m in _TOKEN_RE.finditer(lowered):
            self.tokens.append(m.group(0))
            self.spans.append((m.start(), m.end()))
        self.used = [False] * len(self.tokens)
        self.trace: list[TraceEntry] = []

    def __len__(self) -> int:
        return len(self.tokens)

    def free(self, i: int) -> bool:
        return 0 <= i < len(self.tokens) and not self.used[i]

    def find_phrase(self, phrase: tuple[str, ...], require_free: bool = True) -> int | None:
        """First index where the phrase occurs contiguously."""
        n = len(phrase)
        for i in range(len(self.tokens) - n + 1):
            if require_free and any(self.used[i + k] for k in range(n)):
                continue
            if all(self.tokens[i + k] == phrase[k] for k in range(n)):
                return i
        return None

    def consume(self, rule: str, start: int, end: int, value: str) -> None:
        for i in range(start, end):
            self.used[i] = True
        self.trace.append(TraceEntry(rule, self.spans[start][0], self.spans[end - 1][1], value))


def _scan_callsign(s: _Scanner, lexicon: PhraseLexicon) -> tuple[str, int, int] | None:
    for i, tok in enumerate(s.tokens):
        if s.used[i] or tok not in lexicon.callsign_airline_map:
            continue
        j = i + 1
        digits = ""
        while j < len(s.tokens) and s.free(j) and s.tokens[j] in lexicon.number_words:
            digits += lexicon.number_words[s.tokens[j]]
            j += 1
        if digits:
            value = f"{lexicon.callsign_airline_map[tok]} {digits}"
            s.consume("callsign", i, j, value)
            return value, i, j
    return None


def _scan_runway_value(s: _Scanner, lexicon: PhraseLexicon, i: int) -> tuple[str, int] | None:
    """Parse spoken digits plus optional side word starting at token i."""
    digits = ""
    j = i
    while j < len(s.tokens) and s.free(j) and s.tokens[j] in lexicon.number_words and len(digits) < 2:
        digits += lexicon.number_words[s.tokens[j]]
        j += 1
    if not digits:
        return None
    if j < len(s.tokens) and s.free(j) and s.tokens[j] in lexicon.runway_sides:
        digits += lexicon.runway_sides[s.tokens[j]]
        j += 1
    return digits, j


def _scan_point(s: _Scanner, lexicon: PhraseLexicon, i: int) -> tuple[str, int] | None:
    """Parse one taxiway point (letter plus optional digits) starting at i."""
    if not (s.free(i) and s.tokens[i] in lexicon.phonetic_alphabet):
        return None
    value = lexicon.phonetic_alphabet[s.tokens[i]]
    j = i + 1
    while j < len(s.tokens) and s.free(j) and s.tokens[j] in lexicon.number_words:
        value += lexicon.number_words[s.tokens[j]]
        j += 1
    return value, j


def _scan_boundary(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    for trigger in (("hold", "short", "of"), ("holding", "short", "of")):
        i = s.find_phrase(trigger)
        if i is None:
            continue
        j = i + len(trigger)
        if j < len(s.tokens) and s.free(j) and s.tokens[j] == "runway":
            parsed = _scan_runway_value(s, lexicon, j + 1)
            if parsed is not None:
                designator, end = parsed
                value = f"runway {designator}"
                s.consume("boundary", i, end, value)
                return value
        parsed = _scan_point(s, lexicon, j)
        if parsed is not None:
            value, end = parsed
            s.consume("boundary", i, end, value)
            return value
    return None


def _scan_runway_slot(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    for i, tok in enumerate(s.tokens):
        if s.used[i] or tok != "runway":
            continue
        parsed = _scan_runway_value(s, lexicon, i + 1)
        if parsed is not None:
            value, end = parsed
            s.consume("runway", i, end, value)
            return value
    return None


def _scan_route(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    i = s.find_phrase(("via",))
    if i is None:
        return None
    points = []
    j = i + 1
    while j < len(s.tokens):
        parsed = _scan_point(s, lexicon, j)
        if parsed is None:
            break
        value, j = parsed
        points.append(value)
    if not points:
        return None
    value = " ".join(points)
    s.consume("taxiway", i, j, value)
    return value


def _scan_frequency(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    for i, tok in enumerate(s.tokens):
        if s.used[i] or tok != "decimal":
            continue
        lo = i
        whole = []
        while lo - 1 >= 0 and s.free(lo - 1) and s.tokens[lo - 1] in lexicon.number_words:
            lo -= 1
            whole.insert(0, lexicon.number_words[s.tokens[lo]])
        hi = i + 1
        frac = []
        while hi < len(s.tokens) and s.free(hi) and s.tokens[hi] in lexicon.number_words:
            frac.append(lexicon.number_words[s.tokens[hi]])
            hi += 1
        if whole and frac:
            value = "".join(whole) + "." + "".join(frac)
            s.consume("frequency", lo, hi, value)
            return value
    return None


def _scan_gate(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    i = s.find_phrase(("gate",))
    if i is None:
        return None
    parsed = _scan_point(s, lexicon, i + 1)
    if parsed is None:
        return None
    value, end = parsed
    s.consume("gate", i, end, value)
    return value


def _scan_vehicle(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    for anchor in (("give", "way", "to"), ("giving", "way", "to")):
        i = s.find_phrase(anchor, require_free=False)
        if i is None:
            continue
        j = i + len(anchor)
        if j < len(s.tokens) and s.free(j) and s.tokens[j] == "the":
            j += 1
        for phrase in lexicon.vehicles:
            if all(
                s.free(j + k) and s.tokens[j + k] == phrase[k]
                for k in range(len(phrase))
            ):
                value = " ".join(phrase)
                s.consume("vehicle", j, j + len(phrase), value)
                return value
    return None


def _scan_phrase_set(
    s: _Scanner, phrases: tuple[tuple[str, ...], ...], rule: str
) -> str | None:
    for phrase in phrases:
        i = s.find_phrase(phrase)
        if i is not None:
            value = " ".join(phrase)
            s.consume(rule, i, i + len(phrase), value)
            return value
    return None


def _scan_unit(s: _Scanner, lexicon: PhraseLexicon) -> str | None:
    for i, tok in enumerate(s.tokens):
        if s.free(i) and tok in lexicon.controller_units:
            s.consume("controller", i, i + 1, tok)
            return tok
    return None


def _detect_action(tokens: list[str], lexicon: PhraseLexicon) -> ActionType:
    text = " ".join(tokens)
    padded = f" {text} "
    for action, _ in _TRIGGER_PRIORITY:
        for phrase in lexicon.action_trigger_patterns.get(action, ()):
            if f" {' '.join(phrase)} " in padded:
                return action
    return ActionType.UNKNOWN


_SLOT_ENTITY = {
    "callsign": EntityType.CALLSIGN,
    "taxiway": EntityType.TAXIWAY,
    "runway": EntityType.RUNWAY,
    "boundary": EntityType.CONDITION,
    "vehicle": EntityType.VEHICLE,
    "frequency": EntityType.FREQUENCY,
    "controller": EntityType.CONTROLLER,
    "gate": EntityType.GATE,
    "qualifier": EntityType.QUALIFIER,
}


def parse_transcript(
    transcript: str,
    lexicon: PhraseLexicon | None = None,
    utterance_id: str = "",
) -> tuple[Prediction, ParseTrace]:
    """Parse one transcript; worst case is an UNKNOWN action with no slots."""
    lexicon = lexicon or _DEFAULT_LEXICON
    s = _Scanner(transcript)
    action = _detect_action(s.tokens, lexicon)

    callsign = _scan_callsign(s, lexicon)
    values: dict[str, str] = {}
    if callsign is not None:
        values["callsign"] = callsign[0]
    boundary = _scan_boundary(s, lexicon)
    if boundary is not None:
        values["boundary"] = boundary
    runway = _scan_runway_slot(s, lexicon)
    if runway is not None:
        values["runway"] = runway
    route = _scan_route(s, lexicon)
    if route is not None:
        values["taxiway"] = route
    freq = _scan_frequency(s, lexicon)
    if freq is not None:
        values["frequency"] = freq
    gate = _scan_gate(s, lexicon)
    if gate is not None:
        values["gate"] = gate
    vehicle = _scan_vehicle(s, lexicon)
    if vehicle is not None:
        values["vehicle"] = vehicle
    qualifier = _scan_phrase_set(s, lexicon.qualifiers, "qualifier")
    if qualifier is not None:
        values["qualifier"] = qualifier
    unit = _scan_unit(s, lexicon)
    if unit is not None:
        values["controller"] = unit
    greeting = _scan_phrase_set(s, lexicon.greetings, "greeting")
    inform = _scan_phrase_set(s, lexicon.inform_phrases, "report")

    slots = {
        name: values[name]
        for name in DEFAULT_ACTION_SCHEMA[action].critical_slots
        if name in values
    }

    entities = [
        EntitySpan(_SLOT_ENTITY[name], value) for name, value in values.items()
    ]
    if greeting is not None:
        entities.append(EntitySpan(EntityType.GREET, greeting))
    if inform is not None:
        entities.append(EntitySpan(EntityType.REPORT, inform))

    speaker, intent = _infer_speaker_intent(s, lexicon, action, callsign, unit)
    prediction = Prediction(
        utterance_id=utterance_id,
        speaker=speaker,
        intent=intent,
        action=ActionAnnotation(action_type=action, slots=slots),
        entities=tuple(entities),
    )
    return prediction, ParseTrace(matched_rules=tuple(s.trace))


def _infer_speaker_intent(
    s: _Scanner,
    lexicon: PhraseLexicon,
    action: ActionType,
    callsign: tuple[str, int, int] | None,
    unit: str | None,
):
    cs_first = callsign is not None and callsign[1] == 0
    cs_last = callsign is not None and callsign[2] == len(s.tokens)
    unit_first = len(s.tokens) > 0 and s.tokens[0] in lexicon.controller_units

    if action is ActionType.GREET:
        intent = Intent.GREET
    elif action is ActionType.INFORM:
        intent = Intent.INFORM
    elif cs_first:
        intent = Intent.INSTRUCTION
    elif cs_last:
        intent = Intent.READBACK
    else:
        intent = None

    if unit_first:
        speaker = Speaker.PILOT
    elif cs_first:
        speaker = Speaker.CONTROLLER
    elif cs_last:
        speaker = Speaker.PILOT
    else:
        speaker = None
    return speaker, intent


_DEFAULT_LEXICON = default_lexicon()


def parse_corpus(
    corpus: Corpus,
    lexicon: PhraseLexicon | None = None,
    model_name: str = "baseline-parser",
) -> PredictionSet:
    """Run the parser over every transcript of a corpus."""
    predictions = {}
    for utt in corpus.utterances:
        pred, _ = parse_transcript(utt.transcript, lexicon, utterance_id=utt.id)
        predictions[utt.id] = pred
    return PredictionSet(predictions=predictions, model_name=model_name)


def self_test_against(
    corpus: Corpus, cfg: WeightConfig, lexicon: PhraseLexicon | None = None
) -> RiskReport:
    """Parse every transcript and score against the corpus annotations."""
    return build_risk_report(corpus, parse_corpus(corpus, lexicon), cfg)
