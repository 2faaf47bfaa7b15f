"""Consequence-aware evaluation toolkit for ATC language understanding."""

__version__ = "0.1.0"

from atcgrade.schema import (
    ActionAnnotation,
    ActionType,
    EntitySpan,
    EntityType,
    Intent,
    Prediction,
    RiskLevel,
    Speaker,
    Utterance,
    WeightConfig,
    default_weight_config,
    validate_config,
)

__all__ = [
    "__version__",
    "ActionAnnotation",
    "ActionType",
    "EntitySpan",
    "EntityType",
    "Intent",
    "Prediction",
    "RiskLevel",
    "Speaker",
    "Utterance",
    "WeightConfig",
    "default_weight_config",
    "validate_config",
]
