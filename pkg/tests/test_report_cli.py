import json
import os

import pytest
from click.testing import CliRunner

from conftest import mutate_predictions, perfect_predictions
from atcgrade.cli import EXIT_CONFIG, EXIT_IO, EXIT_VALIDATION, main
from atcgrade.corpus_io import (
    generate_synthetic_corpus,
    load_predictions,
    write_corpus,
    write_predictions,
)
from atcgrade.report import (
    EvaluationReport,
    build_comparison,
    build_report,
    canonical_json,
    render_comparison_csv,
    render_comparison_table,
    render_csv,
    render_table,
)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workspace(tmp_path, cfg):
    corpus = generate_synthetic_corpus(seed=2, n=30)
    corpus_path = str(tmp_path / "corpus.jsonl")
    write_corpus(corpus, corpus_path)
    preds = mutate_predictions(corpus, seed=2, cfg=cfg)
    preds_path = str(tmp_path / "preds.jsonl")
    write_predictions(preds, preds_path)
    return tmp_path, corpus, corpus_path, preds, preds_path


def test_build_report_is_deterministic(workspace, cfg):
    _, corpus, _, preds, _ = workspace
    a = canonical_json(build_report(corpus, preds, cfg))
    b = canonical_json(build_report(corpus, preds, cfg))
    assert a == b
    assert "generated_at" not in a  # reports carry no timestamps


def test_report_round_trip(workspace, cfg):
    _, corpus, _, preds, _ = workspace
    report = build_report(corpus, preds, cfg)
    loaded = EvaluationReport.from_dict(json.loads(canonical_json(report)))
    assert canonical_json(loaded) == canonical_json(report)


def test_report_warnings_count_skips(workspace, cfg):
    _, corpus, _, preds, _ = workspace
    from atcgrade.corpus_io import PredictionSet
    from atcgrade.schema import Prediction

    extended = dict(preds.predictions)
    extended["not-a-real-id"] = Prediction(utterance_id="not-a-real-id")
    report = build_report(corpus, PredictionSet(extended, preds.model_name), cfg)
    assert report.warnings["skipped_prediction_ids"] == 1
    missing = len(corpus.utterances) - sum(
        1 for uid in preds.predictions if uid in {u.id for u in corpus.utterances}
    )
    assert report.warnings["utterances_without_prediction"] == missing


def test_cross_format_consistency(workspace, cfg):
    _, corpus, _, preds, _ = workspace
    report = build_report(corpus, preds, cfg)
    payload = json.loads(canonical_json(report))["metrics"]
    csv_rows = {}
    for line in render_csv(report).splitlines()[1:]:
        key, _, value = line.partition(",")
        csv_rows[key] = value
    for key, value in payload.items():
        assert abs(float(csv_rows[key]) - value) <= 1e-9
    table = render_table(report)
    assert f"{report.risk.action_risk_score:.4f}" in table


def test_comparison_ranks_by_risk_score(workspace, cfg):
    _, corpus, _, _, _ = workspace
    good = build_report(corpus, perfect_predictions(corpus, "good"), cfg, model_name="good")
    noisy = build_report(corpus, mutate_predictions(corpus, 9, cfg, "noisy"), cfg, model_name="noisy")
    table = build_comparison([noisy, good])
    assert [r.model_name for r in table.rows] == ["good", "noisy"]
    rendered = render_comparison_table(table)
    assert rendered.index("good") < rendered.index("noisy")
    csv_text = render_comparison_csv(table)
    assert csv_text.splitlines()[1].startswith("good,")


def test_comparison_rejects_mismatched_corpora(cfg):
    a = generate_synthetic_corpus(seed=1, n=5)
    b = generate_synthetic_corpus(seed=2, n=5)
    ra = build_report(a, perfect_predictions(a), cfg, model_name="a")
    rb = build_report(b, perfect_predictions(b), cfg, model_name="b")
    with pytest.raises(ValueError, match="corpus hash mismatch"):
        build_comparison([ra, rb])


# --- CLI ---------------------------------------------------------------------


def test_cli_validate_ok(runner, workspace):
    _, _, corpus_path, _, _ = workspace
    result = runner.invoke(main, ["validate", corpus_path])
    assert result.exit_code == 0
    assert "ok:" in result.output


def test_cli_validate_duplicate_id(runner, tmp_path):
    corpus = generate_synthetic_corpus(seed=1, n=1)
    line = json.dumps(corpus.utterances[0].to_dict())
    header = json.dumps({"record": "header", "format": "atc-corpus", "version": 1, "metadata": {}})
    path = tmp_path / "dup.jsonl"
    path.write_text(header + "\n" + line + "\n" + line + "\n")
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == EXIT_VALIDATION
    assert "u0001" in result.output


def test_cli_validate_empty_file(runner, tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == EXIT_VALIDATION


def test_cli_validate_missing_file_is_io_error(runner, tmp_path):
    result = runner.invoke(main, ["validate", str(tmp_path / "nope.jsonl")])
    assert result.exit_code == EXIT_IO


def test_cli_evaluate_matches_library(runner, workspace, cfg):
    _, corpus, corpus_path, preds, preds_path = workspace
    result = runner.invoke(main, ["evaluate", corpus_path, preds_path, "--format", "json-lines"])
    assert result.exit_code == 0
    assert result.output.strip() == canonical_json(build_report(corpus, preds, cfg))


def test_cli_evaluate_identical_bytes_across_runs(runner, workspace, tmp_path):
    _, _, corpus_path, _, preds_path = workspace
    out1 = str(tmp_path / "r1.json")
    out2 = str(tmp_path / "r2.json")
    assert runner.invoke(main, ["evaluate", corpus_path, preds_path, "--format", "json-lines", "-o", out1]).exit_code == 0
    assert runner.invoke(main, ["evaluate", corpus_path, preds_path, "--format", "json-lines", "-o", out2]).exit_code == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_cli_evaluate_golden_fixture(runner, cfg):
    data = os.path.join(os.path.dirname(__file__), "data")
    result = runner.invoke(main, [
        "evaluate",
        os.path.join(data, "golden_corpus.jsonl"),
        os.path.join(data, "golden_predictions.jsonl"),
        "--format", "json-lines",
    ])
    assert result.exit_code == 0
    got = json.loads(result.output)["metrics"]
    expected = json.load(open(os.path.join(data, "golden_expected.json")))["metrics"]
    for key, value in expected.items():
        assert abs(got[key] - value) <= 1e-12


def test_cli_evaluate_perfect_and_empty(runner, tmp_path, cfg):
    corpus = generate_synthetic_corpus(seed=3, n=10)
    corpus_path = str(tmp_path / "c.jsonl")
    write_corpus(corpus, corpus_path)
    perfect_path = str(tmp_path / "perfect.jsonl")
    write_predictions(perfect_predictions(corpus), perfect_path)
    result = runner.invoke(main, ["evaluate", corpus_path, perfect_path, "--format", "json-lines"])
    metrics = json.loads(result.output)["metrics"]
    for key in ("rw_er", "action_risk_score", "act_wt", "risk_strict", "entity_macro_f1"):
        assert metrics[key] == 1.0
    empty_path = str(tmp_path / "none.jsonl")
    open(empty_path, "w").close()
    result = runner.invoke(main, ["evaluate", corpus_path, empty_path, "--format", "json-lines"])
    metrics = json.loads(result.output)["metrics"]
    assert metrics["rw_er"] == 0.0
    assert metrics["risk_strict"] == 0.0
    assert metrics["speaker_f1"] == 0.0
    assert metrics["intent_f1"] == 0.0
    assert metrics["action_type_f1"] == 0.0


def test_cli_compare_flow(runner, workspace, tmp_path):
    _, corpus, corpus_path, _, preds_path = workspace
    parsed_path = str(tmp_path / "baseline.jsonl")
    assert runner.invoke(main, ["parse", corpus_path, "-o", parsed_path]).exit_code == 0
    r1 = str(tmp_path / "model.report.json")
    r2 = str(tmp_path / "baseline.report.json")
    runner.invoke(main, ["evaluate", corpus_path, preds_path, "--format", "json-lines", "-o", r1])
    runner.invoke(main, ["evaluate", corpus_path, parsed_path, "--format", "json-lines", "-o", r2])
    result = runner.invoke(main, ["compare", r1, r2])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].startswith("Model")
    assert "baseline-parser" in result.output

    other = generate_synthetic_corpus(seed=55, n=5)
    other_path = str(tmp_path / "other.jsonl")
    write_corpus(other, other_path)
    other_preds = str(tmp_path / "otherpreds.jsonl")
    runner.invoke(main, ["parse", other_path, "-o", other_preds])
    r3 = str(tmp_path / "other.report.json")
    runner.invoke(main, ["evaluate", other_path, other_preds, "--format", "json-lines", "-o", r3])
    mismatch = runner.invoke(main, ["compare", r1, r3])
    assert mismatch.exit_code == EXIT_VALIDATION
    assert "mismatch" in mismatch.output


def test_cli_parse_deterministic(runner, workspace, tmp_path):
    _, _, corpus_path, _, _ = workspace
    p1 = str(tmp_path / "p1.jsonl")
    p2 = str(tmp_path / "p2.jsonl")
    assert runner.invoke(main, ["parse", corpus_path, "-o", p1]).exit_code == 0
    assert runner.invoke(main, ["parse", corpus_path, "-o", p2]).exit_code == 0
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert load_predictions(p1).model_name == "baseline-parser"


def test_cli_generate_and_validate(runner, tmp_path):
    out = str(tmp_path / "gen.jsonl")
    result = runner.invoke(main, ["generate", "--seed", "5", "--size", "40", "-o", out])
    assert result.exit_code == 0
    assert runner.invoke(main, ["validate", out]).exit_code == 0


def test_cli_generate_bad_mix(runner, tmp_path):
    result = runner.invoke(
        main, ["generate", "--risk-mix", "0.9,0.9,0.9", "-o", str(tmp_path / "x.jsonl")]
    )
    assert result.exit_code == EXIT_CONFIG


def test_cli_perturb_small_sweep(runner, workspace):
    _, _, corpus_path, _, _ = workspace
    result = runner.invoke(main, [
        "perturb", corpus_path, "--wer-grid", "0,0.3", "--seeds", "2", "--format", "csv",
    ])
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("seed,wer,")
    assert len(lines) == 1 + 2 * 2
    result = runner.invoke(main, [
        "perturb", corpus_path, "--wer-grid", "0,0.3", "--seeds", "1", "--format", "table",
    ])
    assert result.exit_code == 0
    assert "risk_strict" in result.output


def test_cli_bad_config_exit_code(runner, workspace, tmp_path):
    _, _, corpus_path, _, preds_path = workspace
    bad = tmp_path / "bad.yaml"
    bad.write_text("overlap_threshold: 7\n")
    result = runner.invoke(main, ["evaluate", corpus_path, preds_path, "--config", str(bad)])
    assert result.exit_code == EXIT_CONFIG


def test_cli_run_model_against_stub(runner, workspace, tmp_path, monkeypatch):
    from stub_endpoint import echo_endpoint

    _, corpus, corpus_path, _, _ = workspace
    monkeypatch.setenv("ATCGRADE_API_TOKEN", "x")
    with echo_endpoint(corpus) as stub:
        endpoint_yaml = tmp_path / "endpoint.yaml"
        endpoint_yaml.write_text(
            f"base_url: {stub.url}\nmodel_name: stub-model\nmax_retries: 0\nconcurrency_limit: 4\n"
        )
        out_dir = str(tmp_path / "run")
        result = runner.invoke(main, [
            "run-model", corpus_path, "--endpoint", str(endpoint_yaml), "-o", out_dir,
        ])
    assert result.exit_code == 0
    pred_file = os.path.join(out_dir, "stub-model.predictions.jsonl")
    manifest_file = os.path.join(out_dir, "stub-model.manifest.jsonl")
    assert os.path.exists(pred_file) and os.path.exists(manifest_file)
    eval_result = runner.invoke(main, ["evaluate", corpus_path, pred_file, "--format", "json-lines"])
    metrics = json.loads(eval_result.output)["metrics"]
    assert metrics["risk_strict"] == 1.0
