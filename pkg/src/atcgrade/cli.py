"""Command-line front end.

Subcommands: validate, evaluate, compare, perturb, parse, run-model,
generate. Exit codes: 0 success, 2 validation failure, 3 I/O failure,
4 configuration failure.
"""

from __future__ import annotations

import json
import math
import os
import sys

import click

from atcgrade import baseline_parser, corpus_io, model_runner, perturbation, report as report_mod
from atcgrade.schema import SchemaError, WeightConfig, default_weight_config, load_weight_config

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CONFIG = 4

_FORMATS = click.Choice(["table", "csv", "json-lines"])


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_cfg(config_path: str | None) -> WeightConfig:
    if config_path is None:
        return default_weight_config()
    try:
        return load_weight_config(config_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read config: {exc}")
    except (SchemaError, ValueError) as exc:
        _fail(EXIT_CONFIG, f"bad config: {exc}")
    raise AssertionError("unreachable")


def _load_corpus(path: str, cfg: WeightConfig) -> corpus_io.Corpus:
    try:
        return corpus_io.load_corpus(path, cfg)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read corpus: {exc}")
    except corpus_io.CorpusFormatError as exc:
        _fail(EXIT_VALIDATION, f"invalid corpus: {exc}")
    raise AssertionError("unreachable")


def _write_output(text: str, output: str | None) -> None:
    if output is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        tmp = output + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        os.replace(tmp, output)


def _emit_report(rep: report_mod.EvaluationReport, fmt: str, output: str | None) -> None:
    if fmt == "json-lines":
        _write_output(report_mod.canonical_json(rep), output)
    elif fmt == "csv":
        _write_output(report_mod.render_csv(rep), output)
    else:
        _write_output(report_mod.render_table(rep), output)


@click.group()
def main() -> None:
    """Consequence-aware evaluation for ATC language understanding."""


@main.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
def validate(corpus_path: str, config_path: str | None) -> None:
    """Validate a corpus file; exit 0 only when clean."""
    cfg = _load_cfg(config_path)
    corpus = _load_corpus(corpus_path, cfg)
    click.echo(f"ok: {len(corpus)} utterances, {len(corpus.metadata)} metadata keys")


@main.command()
@click.argument("corpus_path", type=click.Path())
@click.argument("predictions_path", type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--model-name", default=None, help="Override the model name in the report.")
@click.option("-o", "--output", type=click.Path(), default=None)
def evaluate(
    corpus_path: str,
    predictions_path: str,
    config_path: str | None,
    fmt: str,
    model_name: str | None,
    output: str | None,
) -> None:
    """Score a prediction file against a corpus and emit the full report."""
    cfg = _load_cfg(config_path)
    corpus = _load_corpus(corpus_path, cfg)
    try:
        preds = corpus_io.load_predictions(predictions_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read predictions: {exc}")
    except corpus_io.CorpusFormatError as exc:
        _fail(EXIT_VALIDATION, f"invalid predictions: {exc}")
    rep = report_mod.build_report(corpus, preds, cfg, model_name=model_name)
    _emit_report(rep, fmt, output)


@main.command()
@click.argument("report_paths", nargs=-1, required=True, type=click.Path())
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("-o", "--output", type=click.Path(), default=None)
def compare(report_paths: tuple[str, ...], fmt: str, output: str | None) -> None:
    """Rank stored reports (same corpus and config) by Risk Score."""
    reports = []
    for path in report_paths:
        try:
            reports.append(report_mod.load_report(path))
        except OSError as exc:
            _fail(EXIT_IO, f"cannot read report: {exc}")
        except (KeyError, ValueError) as exc:
            _fail(EXIT_VALIDATION, f"bad report {path}: {exc}")
    try:
        table = report_mod.build_comparison(reports)
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if fmt == "json-lines":
        text = "\n".join(report_mod.canonical_json(r) for r in table.rows)
    elif fmt == "csv":
        text = report_mod.render_comparison_csv(table)
    else:
        text = report_mod.render_comparison_table(table)
    _write_output(text, output)


@main.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--profile", "profile_path", type=click.Path(), default=None)
@click.option("--wer-grid", default="0,0.1,0.3,0.5", show_default=True)
@click.option("--seeds", default=5, show_default=True, help="Number of sweep seeds.")
@click.option("--seed", default=0, show_default=True, help="First sweep seed.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--jobs", default=1, show_default=True)
@click.option("-o", "--output", type=click.Path(), default=None)
def perturb(
    corpus_path: str,
    profile_path: str | None,
    wer_grid: str,
    seeds: int,
    seed: int,
    config_path: str | None,
    fmt: str,
    jobs: int,
    output: str | None,
) -> None:
    """Noise-degradation sweep: perturb, re-parse, re-score per WER point."""
    cfg = _load_cfg(config_path)
    corpus = _load_corpus(corpus_path, cfg)
    try:
        grid = sorted(float(w) for w in wer_grid.split(","))
    except ValueError:
        _fail(EXIT_CONFIG, f"bad --wer-grid {wer_grid!r}")
    if profile_path is not None:
        try:
            base = perturbation.load_noise_profile(profile_path)
        except OSError as exc:
            _fail(EXIT_IO, f"cannot read profile: {exc}")
        except SchemaError as exc:
            _fail(EXIT_CONFIG, f"bad profile: {exc}")
    else:
        base = perturbation.NoiseProfile(target_wer=0.0, seed=seed)

    cells: list[tuple[int, float, report_mod.EvaluationReport]] = []
    for offset in range(seeds):
        profile = perturbation.NoiseProfile(
            target_wer=0.0,
            op_mix=base.op_mix,
            confusion_table=base.confusion_table,
            seed=base.seed + offset,
        )
        sweep = perturbation.degradation_sweep(corpus, cfg, profile, grid, jobs=jobs)
        for wer, rep in sweep.items():
            cells.append((profile.seed, wer, rep))

    keys = [k for k, _ in report_mod.COMPARISON_COLUMNS if k != "time_s"]
    keys.insert(keys.index("risk_ner_f1") + 1, "rw_er")
    if fmt == "json-lines":
        lines = [
            json.dumps(
                {"seed": s, "wer": w, "report": rep.to_dict()},
                sort_keys=True,
                separators=(",", ":"),
            )
            for s, w, rep in cells
        ]
        _write_output("\n".join(lines), output)
    elif fmt == "csv":
        lines = ["seed,wer," + ",".join(keys)]
        for s, w, rep in cells:
            lines.append(f"{s},{w!r}," + ",".join(repr(rep.metric(k)) for k in keys))
        _write_output("\n".join(lines) + "\n", output)
    else:
        lines = ["wer    " + "  ".join(f"{k:>18}" for k in keys)]
        for wer in grid:
            values = []
            for key in keys:
                per_seed = [rep.metric(key) for s, w, rep in cells if w == wer]
                values.append(math.fsum(per_seed) / len(per_seed))
            lines.append(f"{wer:<5g}  " + "  ".join(f"{v:>18.4f}" for v in values))
        lines.append(f"(mean over {seeds} seed{'s' if seeds != 1 else ''})")
        _write_output("\n".join(lines) + "\n", output)


@main.command()
@click.argument("corpus_path", type=click.Path())
@click.option("--lexicon", "lexicon_path", type=click.Path(), default=None)
@click.option("--model-name", default="baseline-parser", show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def parse(corpus_path: str, lexicon_path: str | None, model_name: str, output: str) -> None:
    """Run the rule-based baseline parser and write a prediction file."""
    cfg = default_weight_config()
    corpus = _load_corpus(corpus_path, cfg)
    lexicon = None
    if lexicon_path is not None:
        try:
            lexicon = baseline_parser.load_lexicon(lexicon_path)
        except OSError as exc:
            _fail(EXIT_IO, f"cannot read lexicon: {exc}")
        except SchemaError as exc:
            _fail(EXIT_CONFIG, f"bad lexicon: {exc}")
    preds = baseline_parser.parse_corpus(corpus, lexicon, model_name=model_name)
    tmp = output + ".tmp"
    corpus_io.write_predictions(preds, tmp)
    os.replace(tmp, output)
    click.echo(f"wrote {len(preds.predictions)} predictions to {output}")


@main.command("run-model")
@click.argument("corpus_path", type=click.Path())
@click.option("--endpoint", "endpoint_path", type=click.Path(), required=True)
@click.option("-o", "--output-dir", type=click.Path(), default=".", show_default=True)
def run_model_cmd(corpus_path: str, endpoint_path: str, output_dir: str) -> None:
    """Query a chat-completion endpoint and persist predictions plus manifest."""
    cfg = default_weight_config()
    corpus = _load_corpus(corpus_path, cfg)
    try:
        endpoint = model_runner.load_endpoint_config(endpoint_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read endpoint config: {exc}")
    except SchemaError as exc:
        _fail(EXIT_CONFIG, f"bad endpoint config: {exc}")
    try:
        preds, manifest = model_runner.run_model(corpus, endpoint)
    except RuntimeError as exc:
        _fail(EXIT_CONFIG, str(exc))
    os.makedirs(output_dir, exist_ok=True)
    stem = endpoint.model_name.replace("/", "_")
    pred_path = os.path.join(output_dir, f"{stem}.predictions.jsonl")
    manifest_path = os.path.join(output_dir, f"{stem}.manifest.jsonl")
    corpus_io.write_predictions(preds, pred_path)
    model_runner.save_manifest(manifest, manifest_path)
    click.echo(
        f"wrote {pred_path} and {manifest_path}"
        f" (mean latency {model_runner.mean_latency(manifest):.3f}s)"
    )


@main.command()
@click.option("--seed", default=1, show_default=True)
@click.option("--size", default=1000, show_default=True)
@click.option("--risk-mix", default="0.48,0.26,0.26", show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def generate(seed: int, size: int, risk_mix: str, output: str) -> None:
    """Write a seeded synthetic corpus."""
    try:
        mix = tuple(float(p) for p in risk_mix.split(","))
        if len(mix) != 3:
            raise ValueError("need three proportions")
        corpus = corpus_io.generate_synthetic_corpus(seed, size, mix)  # type: ignore[arg-type]
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"bad generation parameters: {exc}")
    tmp = output + ".tmp"
    corpus_io.write_corpus(corpus, tmp)
    os.replace(tmp, output)
    click.echo(f"wrote {len(corpus)} utterances to {output}")


if __name__ == "__main__":
    main()
