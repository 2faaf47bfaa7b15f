"""Client for chat-completion-style endpoints: sends each transcript through
the canonical prompt template, parses responses into predictions, and records
per-utterance wall-clock latency.

Raw response bodies are persisted verbatim in a run manifest, so re-grading
never requires re-querying a model: predictions_from_manifest() rebuilds the
identical PredictionSet from the stored bytes. Latency for a retried
utterance is the total wall time across attempts. The credential is read
from the environment at startup and never written to any artifact.
"""

from __future__ import annotations

import dataclasses
import io
import json
import hashlib
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO

import httpx
import yaml

from atcgrade.corpus_io import Corpus, PredictionSet, corpus_digest, parse_model_output
from atcgrade.schema import SchemaError

MANIFEST_FORMAT = "atc-run-manifest"
MANIFEST_VERSION = 1

# Versioned prompt; its digest is stamped into every manifest so results
# stay traceable to the exact wording.
PROMPT_TEMPLATE = """\
You are grading air traffic control ground communications. Read the
transcript and fill in the template below. Use only these labels:
SPEAKER: PILOT or CONTROLLER
INTENT: GREET, INFORM, INSTRUCTION, or READBACK
ACTION: HOLD, TAXI, GIVE_WAY, CONTACT, PUSHBACK, INFORM, GREET, STANDBY, or UNKNOWN
SLOTS: one "- name: value" line per filled critical slot
       (callsign, taxiway, boundary, qualifier, runway, vehicle, frequency, controller, gate)
ENTITIES: one "- TYPE: text" line per entity span
          (CALLSIGN, TAXIWAY, RUNWAY, CONDITION, VEHICLE, QUALIFIER, GATE, REPORT, FREQUENCY, CONTROLLER, GREET)

Respond with the completed template only.

Transcript: "{transcript}"
"""


def prompt_digest(template: str = PROMPT_TEMPLATE) -> str:
    return hashlib.sha256(template.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    auth_token_env_var: str = "ATCGRADE_API_TOKEN"
    request_timeout_seconds: float = 60.0
    max_retries: int = 3
    concurrency_limit: int = 4

    def __post_init__(self) -> None:
        if self.request_timeout_seconds <= 0:
            raise SchemaError("request_timeout_seconds must be positive")
        if self.max_retries < 0:
            raise SchemaError("max_retries must be >= 0")
        if self.concurrency_limit < 1:
            raise SchemaError("concurrency_limit must be >= 1")


def load_endpoint_config(source: str | IO[str]) -> EndpointConfig:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    else:
        tree = yaml.safe_load(source)
    if not isinstance(tree, dict) or "base_url" not in tree or "model_name" not in tree:
        raise SchemaError("endpoint config must define base_url and model_name")
    return EndpointConfig(
        base_url=str(tree["base_url"]),
        model_name=str(tree["model_name"]),
        auth_token_env_var=str(tree.get("auth_token_env_var", "ATCGRADE_API_TOKEN")),
        request_timeout_seconds=float(tree.get("request_timeout_seconds", 60.0)),
        max_retries=int(tree.get("max_retries", 3)),
        concurrency_limit=int(tree.get("concurrency_limit", 4)),
    )


@dataclass(frozen=True)
class AttemptRecord:
    utterance_id: str
    raw_response: str
    latency_seconds: float
    retries: int
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "record": "attempt",
            "utterance_id": self.utterance_id,
            "raw_response": self.raw_response,
            "latency_seconds": self.latency_seconds,
            "retries": self.retries,
            "error": self.error,
        }


@dataclass(frozen=True)
class RunManifest:
    model_name: str
    corpus_hash: str
    prompt_hash: str
    started_at: str
    records: tuple[AttemptRecord, ...]


def run_model(
    corpus: Corpus,
    endpoint: EndpointConfig,
    prompt_template: str = PROMPT_TEMPLATE,
    backoff_base_seconds: float = 0.25,
) -> tuple[PredictionSet, RunManifest]:
    """Query the endpoint once per utterance, zero-shot, temperature 0.

    Transport failures after max_retries yield an all-absent prediction plus
    an error note in the manifest; the run continues. Results are ordered by
    utterance index regardless of completion order.
    """
    token = os.environ.get(endpoint.auth_token_env_var)
    if not token:
        raise RuntimeError(
            f"credential environment variable {endpoint.auth_token_env_var!r} is not set"
        )
    started_at = datetime.now(timezone.utc).isoformat()
    headers = {"Authorization": f"Bearer {token}"}

    def query(client: httpx.Client, utterance) -> AttemptRecord:
        prompt = prompt_template.format(transcript=utterance.transcript)
        payload = {
            "model": endpoint.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        start = time.perf_counter()
        error: str | None = None
        body = ""
        retries = 0
        for attempt in range(endpoint.max_retries + 1):
            retries = attempt
            try:
                response = client.post(endpoint.base_url, json=payload, headers=headers)
                if response.status_code // 100 == 2:
                    body = response.text
                    error = None
                    break
                error = f"http status {response.status_code}"
            except httpx.HTTPError as exc:
                error = f"transport error: {exc.__class__.__name__}"
            if attempt < endpoint.max_retries:
                time.sleep(backoff_base_seconds * (2**attempt))
        latency = time.perf_counter() - start
        return AttemptRecord(
            utterance_id=utterance.id,
            raw_response=body,
            latency_seconds=latency,
            retries=retries,
            error=error,
        )

    with httpx.Client(timeout=endpoint.request_timeout_seconds) as client:
        with ThreadPoolExecutor(max_workers=endpoint.concurrency_limit) as pool:
            records = tuple(
                pool.map(lambda utt: query(client, utt), corpus.utterances)
            )

    manifest = RunManifest(
        model_name=endpoint.model_name,
        corpus_hash=corpus_digest(corpus),
        prompt_hash=prompt_digest(prompt_template),
        started_at=started_at,
        records=records,
    )
    return predictions_from_manifest(manifest), manifest


def extract_message_content(raw_response: str) -> str:
    """Pull the assistant text out of a chat-completion response body."""
    if not raw_response.strip():
        return ""
    try:
        data = json.loads(raw_response)
    except json.JSONDecodeError:
        return raw_response
    try:
        choice = data["choices"][0]
    except (KeyError, IndexError, TypeError):
        return ""
    message = choice.get("message") if isinstance(choice, dict) else None
    if isinstance(message, dict) and isinstance(message.get("content"), str):
        return message["content"]
    if isinstance(choice, dict) and isinstance(choice.get("text"), str):
        return choice["text"]
    return ""


def predictions_from_manifest(manifest: RunManifest) -> PredictionSet:
    """Re-parse persisted raw responses; grading changes never re-query."""
    predictions = {}
    for record in manifest.records:
        content = extract_message_content(record.raw_response)
        outcome = parse_model_output(content, record.utterance_id)
        predictions[record.utterance_id] = dataclasses.replace(
            outcome.prediction, latency_seconds=record.latency_seconds
        )
    return PredictionSet(predictions=predictions, model_name=manifest.model_name)


def manifest_diagnostics_count(manifest: RunManifest) -> int:
    total = 0
    for record in manifest.records:
        content = extract_message_content(record.raw_response)
        total += len(parse_model_output(content, record.utterance_id).diagnostics)
    return total


def mean_latency(manifest: RunManifest) -> float:
    """Arithmetic mean of per-utterance wall time, retries included."""
    if not manifest.records:
        raise ValueError("manifest has no attempts")
    return math.fsum(r.latency_seconds for r in manifest.records) / len(manifest.records)


def manifest_to_bytes(manifest: RunManifest) -> bytes:
    out = io.StringIO()
    header = {
        "record": "header",
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "model_name": manifest.model_name,
        "corpus_hash": manifest.corpus_hash,
        "prompt_hash": manifest.prompt_hash,
        "started_at": manifest.started_at,
    }
    out.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
    for record in manifest.records:
        out.write(json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
    return out.getvalue().encode("utf-8")


def save_manifest(manifest: RunManifest, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(manifest_to_bytes(manifest))


def load_manifest(source: str | bytes | IO) -> RunManifest:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, bytes):
        raw = source
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
    lines = [line for line in raw.decode("utf-8").splitlines() if line.strip()]
    if not lines:
        raise SchemaError("manifest file is empty")
    header = json.loads(lines[0])
    if header.get("format") != MANIFEST_FORMAT or header.get("version") != MANIFEST_VERSION:
        raise SchemaError("not a run manifest file")
    records = []
    for line in lines[1:]:
        d = json.loads(line)
        records.append(
            AttemptRecord(
                utterance_id=d["utterance_id"],
                raw_response=d.get("raw_response", ""),
                latency_seconds=float(d.get("latency_seconds", 0.0)),
                retries=int(d.get("retries", 0)),
                error=d.get("error"),
            )
        )
    return RunManifest(
        model_name=str(header.get("model_name", "")),
        corpus_hash=str(header.get("corpus_hash", "")),
        prompt_hash=str(header.get("prompt_hash", "")),
        started_at=str(header.get("started_at", "")),
        records=tuple(records),
    )
