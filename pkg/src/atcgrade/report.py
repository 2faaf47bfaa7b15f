"""Evaluation report assembly, serialization, and multi-model comparison.

A report is a pure function of (corpus, predictions, config): it embeds the
corpus digest, config digest, and threshold so that stale comparisons fail
loudly. Reports carry no timestamps; identical inputs produce byte-identical
canonical JSON, which is what replayability tests hash.

Three output encodings share the same numbers: canonical JSON (full
precision), CSV key/value rows (full precision), and a human table rounded
to 4 decimals.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

from atcgrade.classification_metrics import (
    action_type_f1,
    entity_macro_f1,
    intent_f1,
    per_entity_accuracy,
    speaker_f1,
)
from atcgrade.corpus_io import Corpus, PredictionSet, corpus_digest
from atcgrade.risk_scoring import RiskReport, build_risk_report
from atcgrade.schema import ActionType, EntityType, RiskLevel, WeightConfig

# Column layout for comparison tables: model, latency, then metrics from the
# conventional family to the consequence-aware family.
COMPARISON_COLUMNS = (
    ("time_s", "Time (s)"),
    ("speaker_f1", "Spk F1"),
    ("intent_f1", "Intent F1"),
    ("action_type_f1", "Act F1"),
    ("risk_ner_f1", "Risk-NER"),
    ("entity_macro_f1", "NER F1"),
    ("act_macro", "Act Macro"),
    ("act_wt", "Act W/T"),
    ("action_risk_score", "Risk Score"),
    ("risk_strict", "Risk Strict"),
)


@dataclass(frozen=True)
class EvaluationReport:
    model_name: str
    corpus_hash: str
    config_hash: str
    overlap_threshold: float
    n_utterances: int
    speaker_f1: float
    intent_f1: float
    action_type_f1: float
    entity_macro_f1: float
    risk: RiskReport
    per_entity_accuracy: dict[EntityType, float]
    mean_latency_seconds: float | None = None
    warnings: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "corpus_hash": self.corpus_hash,
            "config_hash": self.config_hash,
            "overlap_threshold": self.overlap_threshold,
            "n_utterances": self.n_utterances,
            "metrics": {
                "speaker_f1": self.speaker_f1,
                "intent_f1": self.intent_f1,
                "action_type_f1": self.action_type_f1,
                "entity_macro_f1": self.entity_macro_f1,
                "risk_ner_f1": self.risk.risk_ner_f1,
                "rw_er": self.risk.rw_er,
                "act_macro": self.risk.act_macro,
                "act_wt": self.risk.act_wt,
                "action_risk_score": self.risk.action_risk_score,
                "risk_strict": self.risk.risk_strict,
            },
            "per_entity_accuracy": {
                e.value: v for e, v in self.per_entity_accuracy.items()
            },
            "per_risk_level": {
                level.value: {"type_accuracy": acc[0], "slot_accuracy": acc[1]}
                for level, acc in self.risk.per_risk_level.items()
            },
            "per_action": {a.value: s for a, s in self.risk.per_action.items()},
            "mean_latency_seconds": self.mean_latency_seconds,
            "warnings": dict(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvaluationReport:
        metrics = d["metrics"]
        risk = RiskReport(
            rw_er=metrics["rw_er"],
            risk_ner_f1=metrics["risk_ner_f1"],
            action_risk_score=metrics["action_risk_score"],
            act_wt=metrics["act_wt"],
            act_macro=metrics["act_macro"],
            risk_strict=metrics["risk_strict"],
            per_risk_level={
                RiskLevel(k): (v["type_accuracy"], v["slot_accuracy"])
                for k, v in d.get("per_risk_level", {}).items()
            },
            per_action={
                ActionType(k): v for k, v in d.get("per_action", {}).items()
            },
        )
        return cls(
            model_name=d["model_name"],
            corpus_hash=d["corpus_hash"],
            config_hash=d["config_hash"],
            overlap_threshold=d["overlap_threshold"],
            n_utterances=d["n_utterances"],
            speaker_f1=metrics["speaker_f1"],
            intent_f1=metrics["intent_f1"],
            action_type_f1=metrics["action_type_f1"],
            entity_macro_f1=metrics["entity_macro_f1"],
            risk=risk,
            per_entity_accuracy={
                EntityType(k): v for k, v in d.get("per_entity_accuracy", {}).items()
            },
            mean_latency_seconds=d.get("mean_latency_seconds"),
            warnings=dict(d.get("warnings", {})),
        )

    def metric(self, key: str) -> float | None:
        if key == "time_s":
            return self.mean_latency_seconds
        return self.to_dict()["metrics"][key]


def build_report(
    corpus: Corpus,
    preds: PredictionSet,
    cfg: WeightConfig,
    model_name: str | None = None,
    parse_diagnostics: int = 0,
) -> EvaluationReport:
    """Compute every metric for one (corpus, predictions) pair.

    Predictions referencing unknown utterance ids are skipped and counted in
    warnings; utterances without predictions score as full misses.
    """
    known = {u.id for u in corpus.utterances}
    skipped = sum(1 for uid in preds.predictions if uid not in known)
    missing = sum(1 for uid in known if uid not in preds.predictions)
    warnings = {"skipped_prediction_ids": skipped, "utterances_without_prediction": missing}
    if parse_diagnostics:
        warnings["parse_diagnostics"] = parse_diagnostics

    latencies = [
        p.latency_seconds
        for uid, p in preds.predictions.items()
        if uid in known and p.latency_seconds is not None
    ]
    mean_latency = math.fsum(latencies) / len(latencies) if latencies else None

    return EvaluationReport(
        model_name=model_name if model_name is not None else preds.model_name,
        corpus_hash=corpus_digest(corpus),
        config_hash=cfg.digest(),
        overlap_threshold=cfg.overlap_threshold,
        n_utterances=len(corpus.utterances),
        speaker_f1=speaker_f1(corpus, preds),
        intent_f1=intent_f1(corpus, preds),
        action_type_f1=action_type_f1(corpus, preds),
        entity_macro_f1=entity_macro_f1(corpus, preds, cfg),
        risk=build_risk_report(corpus, preds, cfg),
        per_entity_accuracy=per_entity_accuracy(corpus, preds, cfg),
        mean_latency_seconds=mean_latency,
        warnings=warnings,
    )


def canonical_json(report: EvaluationReport) -> str:
    """Deterministic serialization; the byte-identity contract for replays."""
    return json.dumps(report.to_dict(), sort_keys=True, separators=(",", ":"))


def load_report(source: str) -> EvaluationReport:
    with open(source, "r", encoding="utf-8") as fh:
        return EvaluationReport.from_dict(json.load(fh))


def render_csv(report: EvaluationReport) -> str:
    """Key/value rows at full float precision."""
    out = io.StringIO()
    out.write("key,value\n")
    out.write(f"model_name,{report.model_name}\n")
    out.write(f"corpus_hash,{report.corpus_hash}\n")
    out.write(f"config_hash,{report.config_hash}\n")
    out.write(f"n_utterances,{report.n_utterances}\n")
    payload = report.to_dict()
    for key, value in payload["metrics"].items():
        out.write(f"{key},{value!r}\n")
    latency = report.mean_latency_seconds
    out.write(f"time_s,{'' if latency is None else repr(latency)}\n")
    for entity, value in report.per_entity_accuracy.items():
        out.write(f"per_entity_accuracy.{entity.value},{value!r}\n")
    for level, (type_acc, slot_acc) in report.risk.per_risk_level.items():
        out.write(f"per_risk_level.{level.value}.type_accuracy,{type_acc!r}\n")
        out.write(f"per_risk_level.{level.value}.slot_accuracy,{slot_acc!r}\n")
    for action, score in report.risk.per_action.items():
        out.write(f"per_action.{action.value},{score!r}\n")
    for key, value in report.warnings.items():
        out.write(f"warnings.{key},{value}\n")
    return out.getvalue()


def render_table(report: EvaluationReport) -> str:
    """Human-readable summary, 4-decimal precision."""
    lines = [
        f"model: {report.model_name}",
        f"corpus: {report.corpus_hash[:12]}  config: {report.config_hash[:12]}"
        f"  threshold: {report.overlap_threshold}  n: {report.n_utterances}",
        "",
    ]
    width = max(len(label) for _, label in COMPARISON_COLUMNS)
    for key, label in COMPARISON_COLUMNS:
        value = report.metric(key)
        text = "-" if value is None else f"{value:.4f}"
        lines.append(f"  {label:<{width}}  {text}")
    if report.per_entity_accuracy:
        lines.append("")
        lines.append("  per-entity accuracy:")
        for entity, value in report.per_entity_accuracy.items():
            lines.append(f"    {entity.value:<12} {value:.4f}")
    if report.risk.per_risk_level:
        lines.append("")
        lines.append("  per-risk-level (type acc / slot acc):")
        for level, (type_acc, slot_acc) in report.risk.per_risk_level.items():
            lines.append(f"    {level.value:<8} {type_acc:.4f} / {slot_acc:.4f}")
    if any(report.warnings.values()):
        lines.append("")
        lines.append(f"  warnings: {report.warnings}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ComparisonTable:
    """Reports for several models over the same corpus and config,
    ranked by the consequence-aware score (descending)."""

    rows: tuple[EvaluationReport, ...]

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}


def build_comparison(reports: list[EvaluationReport]) -> ComparisonTable:
    if not reports:
        raise ValueError("no reports to compare")
    first = reports[0]
    for other in reports[1:]:
        if other.corpus_hash != first.corpus_hash:
            raise ValueError(
                f"corpus hash mismatch: {first.model_name!r} vs {other.model_name!r}"
            )
        if other.config_hash != first.config_hash:
            raise ValueError(
                f"config hash mismatch: {first.model_name!r} vs {other.model_name!r}"
            )
    ranked = sorted(reports, key=lambda r: -r.risk.action_risk_score)
    return ComparisonTable(rows=tuple(ranked))


def render_comparison_table(table: ComparisonTable) -> str:
    headers = ["Model"] + [label for _, label in COMPARISON_COLUMNS]
    rows = []
    for report in table.rows:
        cells = [report.model_name]
        for key, _ in COMPARISON_COLUMNS:
            value = report.metric(key)
            if value is None:
                cells.append("-")
            elif key == "time_s":
                cells.append(f"{value:.2f}")
            else:
                cells.append(f"{value:.4f}")
        rows.append(cells)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i])
        for i in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for cells in rows:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)))
    return "\n".join(lines) + "\n"


def render_comparison_csv(table: ComparisonTable) -> str:
    out = io.StringIO()
    out.write("model," + ",".join(key for key, _ in COMPARISON_COLUMNS) + "\n")
    for report in table.rows:
        cells = [report.model_name]
        for key, _ in COMPARISON_COLUMNS:
            value = report.metric(key)
            cells.append("" if value is None else repr(value))
        out.write(",".join(cells) + "\n")
    return out.getvalue()
