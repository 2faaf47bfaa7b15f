"""Typed data model for ATC ground-communication grading.

Single source of truth for the enumerations (speaker roles, intents, action
taxonomy, risk levels, entity categories), the annotated record types, and
the weight configuration every scoring module consumes. All types are
immutable after construction and safe to share across workers.

Serialization convention: every persisted type round-trips through
``to_dict``/``from_dict`` with stable field names; see docs/formats.md.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, IO

import yaml


class Speaker(str, enum.Enum):
    PILOT = "PILOT"
    CONTROLLER = "CONTROLLER"


class Intent(str, enum.Enum):
    GREET = "GREET"
    INFORM = "INFORM"
    INSTRUCTION = "INSTRUCTION"
    READBACK = "READBACK"


class ActionType(str, enum.Enum):
    HOLD = "HOLD"
    TAXI = "TAXI"
    GIVE_WAY = "GIVE_WAY"
    CONTACT = "CONTACT"
    PUSHBACK = "PUSHBACK"
    INFORM = "INFORM"
    GREET = "GREET"
    STANDBY = "STANDBY"
    UNKNOWN = "UNKNOWN"


class RiskLevel(str, enum.Enum):
    HIGH = "HIGH"
    MEDIUM = "MEDIUM"
    LOW = "LOW"

    @property
    def coefficient(self) -> float:
        """Operational risk coefficient of this level."""
        return _RISK_COEFFICIENT[self]

    @property
    def miss_coefficient(self) -> float:
        """Score multiplier applied when the action type is predicted wrong.

        Equals 1 minus the risk coefficient; kept as exact literals so the
        reachable set is {0.0, 0.4, 0.8} with no float drift.
        """
        return _MISS_COEFFICIENT[self]


_RISK_COEFFICIENT = {RiskLevel.HIGH: 1.0, RiskLevel.MEDIUM: 0.6, RiskLevel.LOW: 0.2}
_MISS_COEFFICIENT = {RiskLevel.HIGH: 0.0, RiskLevel.MEDIUM: 0.4, RiskLevel.LOW: 0.8}


class EntityType(str, enum.Enum):
    CALLSIGN = "CALLSIGN"
    TAXIWAY = "TAXIWAY"
    RUNWAY = "RUNWAY"
    CONDITION = "CONDITION"
    VEHICLE = "VEHICLE"
    QUALIFIER = "QUALIFIER"
    GATE = "GATE"
    REPORT = "REPORT"
    FREQUENCY = "FREQUENCY"
    CONTROLLER = "CONTROLLER"
    GREET = "GREET"
    OUTSIDE = "OUTSIDE"


class SchemaError(ValueError):
    """Raised when a record violates the data model invariants."""


@dataclass(frozen=True)
class EntitySpan:
    """One annotated or predicted semantic slot instance: (category, surface text)."""

    entity_type: EntityType
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.entity_type, EntityType):
            raise SchemaError(f"unknown entity type: {self.entity_type!r}")
        if self.entity_type is EntityType.OUTSIDE:
            raise SchemaError("OUTSIDE spans never participate in matching")
        if not self.text.strip():
            raise SchemaError("entity text must be non-empty")

    def to_pair(self) -> list[str]:
        return [self.entity_type.value, self.text]

    @classmethod
    def from_pair(cls, pair: Any) -> EntitySpan:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise SchemaError(f"entity span must be a [type, text] pair, got {pair!r}")
        return cls(entity_type=_parse_enum(EntityType, pair[0], "entity_type"), text=pair[1])


@dataclass(frozen=True)
class ActionAnnotation:
    """Action type plus its slot map (slot name -> surface value).

    Slot names outside the action's critical-slot set are preserved for
    lossless I/O but ignored by all risk arithmetic.
    """

    action_type: ActionType
    slots: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.action_type, ActionType):
            raise SchemaError(f"unknown action type: {self.action_type!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.action_type.value, "slots": dict(self.slots)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ActionAnnotation:
        return cls(
            action_type=_parse_enum(ActionType, d.get("type"), "action.type"),
            slots={str(k): str(v) for k, v in (d.get("slots") or {}).items()},
        )


@dataclass(frozen=True)
class Utterance:
    """One annotated transmission."""

    id: str
    transcript: str
    speaker: Speaker
    intent: Intent
    action: ActionAnnotation
    entities: tuple[EntitySpan, ...] = ()
    risk_level: RiskLevel = RiskLevel.LOW

    def to_dict(self) -> dict[str, Any]:
        return {
            "record": "utterance",
            "id": self.id,
            "transcript": self.transcript,
            "speaker": self.speaker.value,
            "intent": self.intent.value,
            "action": self.action.to_dict(),
            "entities": [e.to_pair() for e in self.entities],
            "risk_level": self.risk_level.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Utterance:
        if not d.get("id"):
            raise SchemaError("utterance id must be non-empty")
        return cls(
            id=str(d["id"]),
            transcript=str(d.get("transcript", "")),
            speaker=_parse_enum(Speaker, d.get("speaker"), "speaker"),
            intent=_parse_enum(Intent, d.get("intent"), "intent"),
            action=ActionAnnotation.from_dict(d.get("action") or {}),
            entities=tuple(EntitySpan.from_pair(p) for p in d.get("entities", [])),
            risk_level=_parse_enum(RiskLevel, d.get("risk_level"), "risk_level"),
        )


@dataclass(frozen=True)
class Prediction:
    """One model output for an utterance. Absent fields score as misses."""

    utterance_id: str
    speaker: Speaker | None = None
    intent: Intent | None = None
    action: ActionAnnotation | None = None
    entities: tuple[EntitySpan, ...] = ()
    latency_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.latency_seconds is not None and self.latency_seconds < 0:
            raise SchemaError("latency_seconds must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "record": "prediction",
            "utterance_id": self.utterance_id,
            "speaker": self.speaker.value if self.speaker else None,
            "intent": self.intent.value if self.intent else None,
            "action": self.action.to_dict() if self.action else None,
            "entities": [e.to_pair() for e in self.entities],
            "latency_seconds": self.latency_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Prediction:
        if not d.get("utterance_id"):
            raise SchemaError("prediction utterance_id must be non-empty")
        latency = d.get("latency_seconds")
        return cls(
            utterance_id=str(d["utterance_id"]),
            speaker=_parse_optional_enum(Speaker, d.get("speaker"), "speaker"),
            intent=_parse_optional_enum(Intent, d.get("intent"), "intent"),
            action=ActionAnnotation.from_dict(d["action"]) if d.get("action") else None,
            entities=tuple(EntitySpan.from_pair(p) for p in d.get("entities", [])),
            latency_seconds=float(latency) if latency is not None else None,
        )


@dataclass(frozen=True)
class ActionSpec:
    """Risk level and ordered critical slots for one action type."""

    risk: RiskLevel
    critical_slots: tuple[str, ...]


@dataclass(frozen=True)
class WeightConfig:
    """Entity importance weights, action schema, and matching threshold."""

    entity_weights: dict[EntityType, float]
    action_schema: dict[ActionType, ActionSpec]
    slot_entity_map: dict[tuple[ActionType, str], EntityType]
    overlap_threshold: float = 0.9

    def risk_of(self, action_type: ActionType) -> RiskLevel:
        return self.action_schema[action_type].risk

    def critical_slots(self, action_type: ActionType) -> tuple[str, ...]:
        return self.action_schema[action_type].critical_slots

    def slot_weight(self, action_type: ActionType, slot: str) -> float:
        """Importance weight of a critical slot: the weight of its mapped entity."""
        return self.entity_weights[self.slot_entity_map[(action_type, slot)]]

    def to_dict(self) -> dict[str, Any]:
        nested: dict[str, dict[str, str]] = {}
        for (action, slot), entity in self.slot_entity_map.items():
            nested.setdefault(action.value, {})[slot] = entity.value
        return {
            "overlap_threshold": self.overlap_threshold,
            "entity_weights": {e.value: w for e, w in self.entity_weights.items()},
            "action_schema": {
                a.value: {"risk": spec.risk.value, "critical_slots": list(spec.critical_slots)}
                for a, spec in self.action_schema.items()
            },
            "slot_entity_map": nested,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> WeightConfig:
        weights = {
            _parse_enum(EntityType, name, "entity_weights key"): float(w)
            for name, w in (d.get("entity_weights") or {}).items()
        }
        schema = {}
        for name, spec in (d.get("action_schema") or {}).items():
            action = _parse_enum(ActionType, name, "action_schema key")
            schema[action] = ActionSpec(
                risk=_parse_enum(RiskLevel, spec.get("risk"), f"action_schema[{name}].risk"),
                critical_slots=tuple(str(s) for s in spec.get("critical_slots", ())),
            )
        slot_map = {}
        for name, slots in (d.get("slot_entity_map") or {}).items():
            action = _parse_enum(ActionType, name, "slot_entity_map key")
            for slot, entity in slots.items():
                slot_map[(action, str(slot))] = _parse_enum(
                    EntityType, entity, f"slot_entity_map[{name}][{slot}]"
                )
        return cls(
            entity_weights=weights,
            action_schema=schema,
            slot_entity_map=slot_map,
            overlap_threshold=float(d.get("overlap_threshold", 0.9)),
        )

    def digest(self) -> str:
        """Stable hash of the configuration, embedded in every report."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# Expert-elicited entity importance weights; higher means a miss is
# operationally worse. OUTSIDE tokens carry no weight by definition.
DEFAULT_ENTITY_WEIGHTS: dict[EntityType, float] = {
    EntityType.CALLSIGN: 1.00,
    EntityType.TAXIWAY: 0.90,
    EntityType.RUNWAY: 0.95,
    EntityType.CONDITION: 0.95,
    EntityType.VEHICLE: 0.65,
    EntityType.QUALIFIER: 0.50,
    EntityType.GATE: 0.40,
    EntityType.REPORT: 0.40,
    EntityType.FREQUENCY: 0.30,
    EntityType.CONTROLLER: 0.25,
    EntityType.GREET: 0.05,
    EntityType.OUTSIDE: 0.00,
}

DEFAULT_ACTION_SCHEMA: dict[ActionType, ActionSpec] = {
    ActionType.HOLD: ActionSpec(RiskLevel.HIGH, ("callsign", "boundary")),
    ActionType.TAXI: ActionSpec(
        RiskLevel.HIGH, ("callsign", "taxiway", "boundary", "qualifier", "runway")
    ),
    ActionType.GIVE_WAY: ActionSpec(RiskLevel.HIGH, ("callsign", "vehicle")),
    ActionType.CONTACT: ActionSpec(RiskLevel.MEDIUM, ("callsign", "frequency", "controller")),
    ActionType.PUSHBACK: ActionSpec(RiskLevel.MEDIUM, ("callsign", "gate", "qualifier")),
    ActionType.INFORM: ActionSpec(RiskLevel.LOW, ("callsign", "controller")),
    ActionType.GREET: ActionSpec(RiskLevel.LOW, ("callsign", "controller")),
    ActionType.STANDBY: ActionSpec(RiskLevel.LOW, ("callsign",)),
    ActionType.UNKNOWN: ActionSpec(RiskLevel.LOW, ("callsign",)),
}

# Slot name -> entity category. Identity for named entities; "boundary"
# (hold-short and movement constraints) lands in CONDITION.
_SLOT_ENTITY: dict[str, EntityType] = {
    "callsign": EntityType.CALLSIGN,
    "taxiway": EntityType.TAXIWAY,
    "boundary": EntityType.CONDITION,
    "qualifier": EntityType.QUALIFIER,
    "runway": EntityType.RUNWAY,
    "vehicle": EntityType.VEHICLE,
    "frequency": EntityType.FREQUENCY,
    "controller": EntityType.CONTROLLER,
    "gate": EntityType.GATE,
}

DEFAULT_SLOT_ENTITY_MAP: dict[tuple[ActionType, str], EntityType] = {
    (action, slot): _SLOT_ENTITY[slot]
    for action, spec in DEFAULT_ACTION_SCHEMA.items()
    for slot in spec.critical_slots
}


def default_weight_config() -> WeightConfig:
    """Built-in configuration: survey weights, action schema, threshold 0.9."""
    return WeightConfig(
        entity_weights=dict(DEFAULT_ENTITY_WEIGHTS),
        action_schema=dict(DEFAULT_ACTION_SCHEMA),
        slot_entity_map=dict(DEFAULT_SLOT_ENTITY_MAP),
        overlap_threshold=0.9,
    )


def validate_config(cfg: WeightConfig) -> list[str]:
    """Check all WeightConfig invariants; violations are data, not failures."""
    violations: list[str] = []
    for entity in EntityType:
        if entity not in cfg.entity_weights:
            violations.append(f"entity_weights missing {entity.value}")
    for entity, w in cfg.entity_weights.items():
        if not 0.0 <= w <= 1.0:
            violations.append(f"entity_weights[{entity.value}] = {w} outside [0, 1]")
    if cfg.entity_weights.get(EntityType.OUTSIDE, 0.0) != 0.0:
        violations.append("entity_weights[OUTSIDE] must be 0.0")
    for action in ActionType:
        if action not in cfg.action_schema:
            violations.append(f"action_schema missing {action.value}")
    for action, spec in cfg.action_schema.items():
        for slot in spec.critical_slots:
            if (action, slot) not in cfg.slot_entity_map:
                violations.append(f"slot_entity_map missing ({action.value}, {slot})")
    for (action, slot), entity in cfg.slot_entity_map.items():
        if entity is EntityType.OUTSIDE:
            violations.append(f"slot_entity_map[({action.value}, {slot})] maps to OUTSIDE")
    if not 0.0 < cfg.overlap_threshold <= 1.0:
        violations.append(f"overlap_threshold = {cfg.overlap_threshold} outside (0, 1]")
    return violations


def load_weight_config(source: str | IO[str]) -> WeightConfig:
    """Load a WeightConfig from a YAML file path or open text stream.

    Raises SchemaError when the loaded tree violates the config invariants.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    else:
        tree = yaml.safe_load(source)
    if not isinstance(tree, dict):
        raise SchemaError("weight config file must contain a mapping")
    cfg = WeightConfig.from_dict(tree)
    violations = validate_config(cfg)
    if violations:
        raise SchemaError("invalid weight config: " + "; ".join(violations))
    return cfg


def write_weight_config(cfg: WeightConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)


def _parse_enum(enum_cls, value, field_name: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise SchemaError(f"{field_name}: {value!r} not one of {{{allowed}}}") from None


def _parse_optional_enum(enum_cls, value, field_name: str):
    if value is None:
        return None
    return _parse_enum(enum_cls, value, field_name)
