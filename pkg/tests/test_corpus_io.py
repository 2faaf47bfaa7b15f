import io
import json

import pytest

from conftest import mutate_predictions, perfect_predictions
from atcgrade.corpus_io import (
    Corpus,
    CorpusFormatError,
    corpus_digest,
    corpus_to_bytes,
    generate_synthetic_corpus,
    load_corpus,
    load_predictions,
    parse_model_output,
    predictions_to_bytes,
    write_corpus,
    write_predictions,
)
from atcgrade.schema import ActionType, RiskLevel


def test_load_corpus_round_trip(cfg, tmp_path):
    corpus = generate_synthetic_corpus(seed=3, n=25)
    path = str(tmp_path / "c.jsonl")
    write_corpus(corpus, path)
    assert load_corpus(path, cfg) == corpus


def test_round_trip_preserves_unknown_extra_slots(cfg):
    corpus = generate_synthetic_corpus(seed=3, n=2)
    record = corpus.utterances[0].to_dict()
    record["action"]["slots"]["weird_extra"] = "kept verbatim"
    header = json.dumps({"record": "header", "format": "atc-corpus", "version": 1, "metadata": {}})
    blob = (header + "\n" + json.dumps(record) + "\n").encode()
    loaded = load_corpus(blob, cfg)
    assert loaded.utterances[0].action.slots["weird_extra"] == "kept verbatim"
    assert load_corpus(corpus_to_bytes(loaded), cfg) == loaded


def test_duplicate_id_error_names_id(cfg):
    corpus = generate_synthetic_corpus(seed=1, n=1)
    line = json.dumps(corpus.utterances[0].to_dict())
    header = json.dumps({"record": "header", "format": "atc-corpus", "version": 1, "metadata": {}})
    blob = "\n".join([header, line, line]).encode()
    with pytest.raises(CorpusFormatError, match="u0001"):
        load_corpus(blob, cfg)


def test_risk_level_cross_check(cfg):
    corpus = generate_synthetic_corpus(seed=1, n=5)
    utt = next(u for u in corpus.utterances if u.risk_level is RiskLevel.HIGH)
    record = utt.to_dict()
    record["risk_level"] = "LOW"
    header = json.dumps({"record": "header", "format": "atc-corpus", "version": 1, "metadata": {}})
    blob = (header + "\n" + json.dumps(record)).encode()
    with pytest.raises(CorpusFormatError, match="LOW"):
        load_corpus(blob, cfg)


def test_malformed_line_reports_line_number(cfg):
    header = json.dumps({"record": "header", "format": "atc-corpus", "version": 1, "metadata": {}})
    blob = (header + "\n{not json}\n").encode()
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_corpus(blob, cfg)


def test_missing_header_rejected(cfg):
    corpus = generate_synthetic_corpus(seed=1, n=1)
    blob = (json.dumps(corpus.utterances[0].to_dict()) + "\n").encode()
    with pytest.raises(CorpusFormatError, match="header"):
        load_corpus(blob, cfg)


def test_empty_corpus_file_rejected(cfg):
    with pytest.raises(CorpusFormatError, match="header"):
        load_corpus(b"", cfg)


def test_empty_predictions_file():
    assert load_predictions(b"").predictions == {}


def test_duplicate_prediction_error():
    corpus = generate_synthetic_corpus(seed=1, n=1)
    preds = perfect_predictions(corpus)
    line = json.dumps(preds.predictions["u0001"].to_dict())
    header = json.dumps(
        {"record": "header", "format": "atc-predictions", "version": 1, "model_name": "m"}
    )
    blob = "\n".join([header, line, line]).encode()
    with pytest.raises(CorpusFormatError, match="u0001"):
        load_predictions(blob)


def test_prediction_missing_action_scores_as_absent():
    header = json.dumps(
        {"record": "header", "format": "atc-predictions", "version": 1, "model_name": "m"}
    )
    record = json.dumps({"record": "prediction", "utterance_id": "u1", "entities": []})
    preds = load_predictions((header + "\n" + record).encode())
    assert preds.predictions["u1"].action is None
    assert preds.predictions["u1"].speaker is None


def test_predictions_round_trip(cfg, tmp_path):
    corpus = generate_synthetic_corpus(seed=5, n=30)
    preds = mutate_predictions(corpus, seed=5, cfg=cfg)
    path = str(tmp_path / "p.jsonl")
    write_predictions(preds, path)
    loaded = load_predictions(path)
    assert loaded == preds
    assert predictions_to_bytes(loaded) == predictions_to_bytes(preds)


# --- model output template -------------------------------------------------


def test_parse_model_output_clean():
    raw = "\n".join([
        "SPEAKER: CONTROLLER",
        "INTENT: INSTRUCTION",
        "ACTION: TAXI",
        "SLOTS:",
        "- callsign: singapore 321",
        "- taxiway: a b",
        "- boundary: runway 02l",
        "- qualifier: with caution",
        "- runway: 02l",
        "ENTITIES:",
        "- CALLSIGN: singapore 321",
        "- TAXIWAY: a b",
    ])
    outcome = parse_model_output(raw, "u1")
    assert outcome.diagnostics == []
    pred = outcome.prediction
    assert pred.action.action_type is ActionType.TAXI
    assert len(pred.action.slots) == 5
    assert len(pred.entities) == 2


def test_parse_model_output_unknown_action():
    raw = "SPEAKER: PILOT\nINTENT: READBACK\nACTION: TAXIING\nSLOTS:\nENTITIES:"
    outcome = parse_model_output(raw, "u1")
    assert outcome.prediction.action is None
    assert any(field == "action" and "unknown action" in why for field, why in outcome.diagnostics)


def test_parse_model_output_empty():
    outcome = parse_model_output("", "u1")
    pred = outcome.prediction
    assert pred.speaker is None and pred.intent is None and pred.action is None
    assert pred.entities == ()
    assert len(outcome.diagnostics) == 1


def test_parse_model_output_case_and_whitespace_tolerant():
    raw = "  speaker :  pilot \n intent: readback\n action:  give way \nslots:\nentities:\n"
    outcome = parse_model_output(raw, "u1")
    assert outcome.prediction.action.action_type is ActionType.GIVE_WAY
    assert outcome.diagnostics == []


def test_parse_model_output_never_throws_and_fields_match_diagnostics():
    import random

    rng = random.Random(23)
    fragments = [
        "SPEAKER: PILOT", "SPEAKER: NOBODY", "INTENT: GREET", "INTENT: ???",
        "ACTION: HOLD", "ACTION: FLY", "SLOTS:", "- callsign: a 1", "- : empty",
        "ENTITIES:", "- CALLSIGN: a 1", "- BOGUS: x", "random words", "", ":::",
    ]
    for _ in range(300):
        raw = "\n".join(rng.choice(fragments) for _ in range(rng.randrange(0, 8)))
        outcome = parse_model_output(raw, "u1")  # must not raise
        pred = outcome.prediction
        named = {field for field, _ in outcome.diagnostics}
        if "response" in named:
            assert pred.speaker is None and pred.intent is None and pred.action is None
            assert pred.entities == ()
            continue
        populated = {
            "speaker": pred.speaker is not None,
            "intent": pred.intent is not None,
            "action": pred.action is not None,
        }
        for field, is_set in populated.items():
            assert is_set == (field not in named), (raw, field, outcome.diagnostics)


def test_template_round_trip_via_stub_renderer(cfg):
    from stub_endpoint import render_template

    corpus = generate_synthetic_corpus(seed=9, n=40)
    for utt in corpus.utterances:
        outcome = parse_model_output(render_template(utt), utt.id)
        assert outcome.diagnostics == []
        pred = outcome.prediction
        assert pred.speaker is utt.speaker
        assert pred.intent is utt.intent
        assert pred.action.action_type is utt.action.action_type
        assert pred.action.slots == dict(utt.action.slots)
        assert pred.entities == utt.entities


# --- synthetic generation ----------------------------------------------------


def test_generator_risk_mix_counts():
    corpus = generate_synthetic_corpus(seed=1, n=100, risk_mix=(0.48, 0.26, 0.26))
    counts = {level: 0 for level in RiskLevel}
    for utt in corpus.utterances:
        counts[utt.risk_level] += 1
    assert counts[RiskLevel.HIGH] == 48
    assert counts[RiskLevel.MEDIUM] == 26
    assert counts[RiskLevel.LOW] == 26


def test_generator_determinism():
    a = generate_synthetic_corpus(seed=7, n=50)
    b = generate_synthetic_corpus(seed=7, n=50)
    assert corpus_to_bytes(a) == corpus_to_bytes(b)
    assert corpus_digest(a) == corpus_digest(b)
    c = generate_synthetic_corpus(seed=8, n=50)
    assert corpus_to_bytes(a) != corpus_to_bytes(c)


def test_generator_degenerate_mix():
    corpus = generate_synthetic_corpus(seed=1, n=1, risk_mix=(1.0, 0.0, 0.0))
    assert len(corpus) == 1
    assert corpus.utterances[0].action.action_type in {
        ActionType.HOLD, ActionType.TAXI, ActionType.GIVE_WAY,
    }


def test_generator_output_passes_validation(cfg):
    corpus = generate_synthetic_corpus(seed=11, n=60)
    assert load_corpus(corpus_to_bytes(corpus), cfg) == corpus


def test_generator_rejects_bad_mix():
    with pytest.raises(ValueError):
        generate_synthetic_corpus(seed=1, n=10, risk_mix=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        generate_synthetic_corpus(seed=1, n=0)


def test_generator_every_utterance_has_callsign():
    corpus = generate_synthetic_corpus(seed=13, n=80)
    for utt in corpus.utterances:
        assert utt.action.slots.get("callsign")


def test_corpus_type_helpers():
    corpus = generate_synthetic_corpus(seed=1, n=3)
    assert isinstance(corpus, Corpus)
    assert set(corpus.by_id()) == {u.id for u in corpus.utterances}


def test_load_from_stream(cfg):
    corpus = generate_synthetic_corpus(seed=1, n=4)
    stream = io.BytesIO(corpus_to_bytes(corpus))
    assert load_corpus(stream, cfg) == corpus
