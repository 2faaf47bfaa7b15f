"""ASR-noise simulation: seeded token-level corruption at a target word
error rate, plus the degradation sweep that drives the baseline parser over
perturbed transcripts and scores against the original annotations.

The number of edits per transcript is round(target_wer * token_count)
(round-half-even), not per-token Bernoulli draws: ground transmissions are
short, so expected-count rounding keeps realized WER tight to the target.
Substitution and deletion positions are sampled without replacement, so a
token is edited at most once per pass.

Substitutions prefer the confusion table (phonetically plausible ASR errors
aimed at safety-critical token classes: digits, phonetic letters, hold/short
style constraint words; left/right confusion is deliberately absent) and
fall back to a frequency-weighted vocabulary drawn from the phrase-template
bank. Insertions draw from the same vocabulary. The default operation mix
is substitution 0.7 / deletion 0.3 / insertion 0.0; insertion noise is fully
supported via custom profiles.
"""

from __future__ import annotations

import dataclasses
import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO

import yaml

from atcgrade import kernels
from atcgrade import phraseology as ph
from atcgrade.baseline_parser import PhraseLexicon, parse_corpus
from atcgrade.corpus_io import Corpus
from atcgrade.report import EvaluationReport, build_report
from atcgrade.schema import SchemaError, WeightConfig

DEFAULT_OP_MIX = (0.7, 0.3, 0.0)

# Plausible misrecognitions for safety-critical token classes. Out-of-lexicon
# replacements ("tree", "juliet", "runaway") model ASR emitting real words the
# downstream grammar does not know.
DEFAULT_CONFUSION_TABLE: dict[str, tuple[tuple[str, float], ...]] = {
    "zero": (("hero", 1.0),),
    "one": (("when", 1.0),),
    "two": (("to", 1.0),),
    "three": (("tree", 1.0),),
    "four": (("fower", 0.5), ("for", 0.5)),
    "five": (("niner", 1.0),),
    "six": (("fix", 1.0),),
    "seven": (("heaven", 1.0),),
    "eight": (("late", 0.5), ("ate", 0.5)),
    "niner": (("five", 0.5), ("nearer", 0.5)),
    "alpha": (("alba", 1.0),),
    "bravo": (("brave", 1.0),),
    "charlie": (("charly", 1.0),),
    "delta": (("delhi", 1.0),),
    "echo": (("ecko", 1.0),),
    "golf": (("gulf", 1.0),),
    "juliett": (("juliet", 1.0),),
    "whiskey": (("whisky", 1.0),),
    "hold": (("old", 0.5), ("holt", 0.5)),
    "short": (("sure", 0.5), ("shot", 0.5)),
    "taxi": (("taxis", 1.0),),
    "runway": (("runaway", 1.0),),
    "contact": (("conduct", 1.0),),
    "decimal": (("dismal", 1.0),),
    "standby": (("standing", 1.0),),
    "pushback": (("push", 1.0),),
}


def default_insertion_vocabulary() -> tuple[tuple[str, float], ...]:
    """Frequency-weighted token vocabulary from the phrase-template bank."""
    weights: dict[str, float] = {}

    def add(words, weight):
        for word in words:
            for token in word.split():
                weights[token] = max(weights.get(token, 0.0), weight)

    add(ph.SPOKEN_DIGITS.values(), 6.0)
    add(ph.PHONETIC_ALPHABET.keys(), 4.0)
    add(("taxi", "via", "hold", "short", "of", "runway", "contact", "pushback",
         "approved", "give", "way", "to", "standby", "gate", "decimal"), 3.0)
    add(ph.AIRLINES, 2.0)
    add(ph.CONTROLLER_UNITS, 2.0)
    add(ph.SIDE_SPOKEN.values(), 2.0)
    add(ph.VEHICLES, 1.5)
    add(ph.TAXI_QUALIFIERS + ph.PUSHBACK_QUALIFIERS, 1.5)
    add(ph.GREETINGS + ph.INFORM_PHRASES, 1.5)
    return tuple(sorted(weights.items()))


_INSERTION_VOCABULARY = default_insertion_vocabulary()


@dataclass(frozen=True)
class NoiseProfile:
    target_wer: float
    op_mix: tuple[float, float, float] = DEFAULT_OP_MIX
    confusion_table: dict[str, tuple[tuple[str, float], ...]] = field(
        default_factory=lambda: dict(DEFAULT_CONFUSION_TABLE)
    )
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.target_wer <= 1.0:
            raise SchemaError(f"target_wer {self.target_wer} outside [0, 1]")
        if len(self.op_mix) != 3 or any(p < 0 for p in self.op_mix):
            raise SchemaError("op_mix must be three non-negative proportions")
        if abs(sum(self.op_mix) - 1.0) > 1e-9:
            raise SchemaError(f"op_mix must sum to 1, got {self.op_mix}")

    def at_wer(self, target_wer: float) -> NoiseProfile:
        return dataclasses.replace(self, target_wer=target_wer)


def load_noise_profile(source: str | IO[str]) -> NoiseProfile:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    else:
        tree = yaml.safe_load(source)
    if not isinstance(tree, dict):
        raise SchemaError("noise profile file must contain a mapping")
    table = DEFAULT_CONFUSION_TABLE
    if "confusion_table" in tree:
        table = {
            str(token): tuple((str(alt), float(w)) for alt, w in alternatives)
            for token, alternatives in tree["confusion_table"].items()
        }
    op_mix = tree.get("op_mix", DEFAULT_OP_MIX)
    if isinstance(op_mix, dict):
        op_mix = (
            float(op_mix.get("substitution", 0.0)),
            float(op_mix.get("deletion", 0.0)),
            float(op_mix.get("insertion", 0.0)),
        )
    return NoiseProfile(
        target_wer=float(tree.get("target_wer", 0.0)),
        op_mix=tuple(float(p) for p in op_mix),
        confusion_table=dict(table),
        seed=int(tree.get("seed", 0)),
    )


@dataclass(frozen=True)
class PerturbationRecord:
    utterance_id: str
    original: str
    perturbed: str
    realized_wer: float
    op_log: tuple[tuple[str, int, str, str], ...]


def _cell_rng(seed: int, wer: float, utterance_id: str) -> random.Random:
    """Stable per-(seed, wer, utterance) RNG; never uses the salted hash()."""
    key = f"{seed}|{wer!r}|{utterance_id}".encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _substitute(token: str, profile: NoiseProfile, rng: random.Random) -> str:
    alternatives = profile.confusion_table.get(token)
    if alternatives:
        words = [a for a, _ in alternatives]
        weights = [w for _, w in alternatives]
        return rng.choices(words, weights=weights, k=1)[0]
    words = [w for w, _ in _INSERTION_VOCABULARY if w != token]
    weights = [wt for w, wt in _INSERTION_VOCABULARY if w != token]
    return rng.choices(words, weights=weights, k=1)[0]


def _insertion_token(rng: random.Random) -> str:
    words = [w for w, _ in _INSERTION_VOCABULARY]
    weights = [wt for _, wt in _INSERTION_VOCABULARY]
    return rng.choices(words, weights=weights, k=1)[0]


def perturb_transcript(
    transcript: str, profile: NoiseProfile, utterance_id: str = ""
) -> PerturbationRecord:
    """Apply seeded token-level edits; realized WER = ops / original length."""
    tokens = transcript.split()
    n = len(tokens)
    rng = _cell_rng(profile.seed, profile.target_wer, utterance_id)
    n_ops = round(profile.target_wer * n)
    if n == 0 or n_ops == 0:
        return PerturbationRecord(
            utterance_id=utterance_id,
            original=transcript,
            perturbed=transcript,
            realized_wer=0.0,
            op_log=(),
        )

    # target_wer <= 1 guarantees n_ops <= n, so sub/del positions can always
    # be sampled without replacement: each token is edited at most once.
    kinds = rng.choices(("substitution", "deletion", "insertion"),
                        weights=profile.op_mix, k=n_ops)
    n_touch = sum(1 for k in kinds if k != "insertion")
    positions = rng.sample(range(n), k=n_touch)

    op_log: list[tuple[str, int, str, str]] = []
    substitutions: dict[int, str] = {}
    deletions: set[int] = set()
    insertions: dict[int, list[str]] = {}
    touch_iter = iter(positions)
    for kind in kinds:
        if kind == "insertion":
            gap = rng.randrange(n + 1)
            token = _insertion_token(rng)
            insertions.setdefault(gap, []).append(token)
            op_log.append(("insertion", gap, "", token))
        else:
            pos = next(touch_iter)
            if kind == "substitution":
                replacement = _substitute(tokens[pos], profile, rng)
                substitutions[pos] = replacement
                op_log.append(("substitution", pos, tokens[pos], replacement))
            else:
                deletions.add(pos)
                op_log.append(("deletion", pos, tokens[pos], ""))

    out: list[str] = []
    for i in range(n + 1):
        out.extend(insertions.get(i, ()))
        if i < n and i not in deletions:
            out.append(substitutions.get(i, tokens[i]))
    return PerturbationRecord(
        utterance_id=utterance_id,
        original=transcript,
        perturbed=" ".join(out),
        realized_wer=len(op_log) / max(n, 1),
        op_log=tuple(op_log),
    )


def perturb_corpus(corpus: Corpus, profile: NoiseProfile) -> tuple[Corpus, list[PerturbationRecord]]:
    """Perturb every transcript; annotations are left untouched."""
    records = []
    utterances = []
    for utt in corpus.utterances:
        record = perturb_transcript(utt.transcript, profile, utterance_id=utt.id)
        records.append(record)
        utterances.append(dataclasses.replace(utt, transcript=record.perturbed))
    metadata = dict(corpus.metadata)
    metadata["perturbed_wer"] = f"{profile.target_wer:g}"
    metadata["perturbed_seed"] = str(profile.seed)
    return Corpus(utterances=tuple(utterances), metadata=metadata), records


def word_error_rate(reference: str, hypothesis: str) -> float:
    """Token edit distance over reference length (may exceed 1)."""
    ref = reference.split()
    hyp = hypothesis.split()
    if not ref:
        return 0.0 if not hyp else float(len(hyp))
    return kernels.levenshtein(ref, hyp) / len(ref)


def degradation_sweep(
    corpus: Corpus,
    cfg: WeightConfig,
    profile_base: NoiseProfile,
    wer_grid: list[float],
    lexicon: PhraseLexicon | None = None,
    jobs: int = 1,
) -> dict[float, EvaluationReport]:
    """Per WER point: perturb transcripts, parse with the baseline parser,
    and score against the original annotations."""
    if list(wer_grid) != sorted(wer_grid):
        raise ValueError("wer_grid must be sorted ascending")

    def run_cell(wer: float) -> tuple[float, EvaluationReport]:
        noisy, _ = perturb_corpus(corpus, profile_base.at_wer(wer))
        preds = parse_corpus(noisy, lexicon, model_name=f"baseline@wer={wer:g}")
        report = build_report(corpus, preds, cfg)
        return wer, report

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(run_cell, wer_grid))
    else:
        results = dict(run_cell(w) for w in wer_grid)
    return {w: results[w] for w in wer_grid}
