"""Synthetic pools and corpora for tests, demos and the acceptance suite.

:func:`complementary_pool` builds three models with engineered
complementary errors. Texts fall into two hidden buckets. Model ``A`` is
reliable (and confident) on bucket 1 but guesses with low confidence on
bucket 2; ``B`` mirrors it. ``C`` is right about 70% of the time everywhere
but reports near-certain probabilities regardless, so untrained combination
rules over-trust it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from polarfuse.core import (
    OUTPUT_FEATURE_SCHEMA,
    Logits,
    ModelKind,
    Probabilities,
    RawModelOutput,
    Score,
    SentimentLabel,
    extract_output_features,
    extract_text_characteristics,
    standardize,
)
from polarfuse.models.external import format_prediction_line
from polarfuse.training import PredictionBundle

POOL_IDS = ("model_a", "model_b", "model_c")
POOL_KINDS = (ModelKind.MACHINE_LEARNING, ModelKind.ENCODING, ModelKind.LEXICON)

_POSITIVE_WORDS = ("great", "love", "excellent", "happy", "amazing", "friendly", "perfect", "nice")
_NEGATIVE_WORDS = ("terrible", "hate", "awful", "delayed", "rude", "worst", "broken", "disappointed")
_NEUTRAL_WORDS = ("flight", "gate", "seat", "ticket", "today", "crew", "bag", "call")
_FILLER = ("the", "was", "my", "and", "this", "a", "our", "it")


@dataclass(frozen=True)
class SyntheticPool:
    text_ids: list[str]
    gold: list[SentimentLabel]
    buckets: list[int]
    outputs: list[tuple[RawModelOutput, ...]]  # per text, in POOL_IDS order


def _signed(correct: bool, gold_sign: int) -> int:
    return gold_sign if correct else -gold_sign


def complementary_pool(n: int, seed: int = 0) -> SyntheticPool:
    rng = np.random.default_rng(seed)
    gold_sign = rng.choice([-1, 1], size=n)
    buckets = rng.integers(1, 3, size=n)
    outputs = []
    for t in range(n):
        g = int(gold_sign[t])
        row = []
        for owner in (1, 2):
            if buckets[t] == owner:
                sign = _signed(rng.random() < 0.95, g)
                spread = rng.uniform(2.5, 4.0)
            else:
                sign = _signed(rng.random() < 0.5, g)
                spread = rng.uniform(0.25, 0.45)
            row.append(Logits(float(sign * spread), float(-sign * spread)))
        sign = _signed(rng.random() < 0.70, g)
        row.append(Score(float(sign * rng.uniform(0.85, 0.99))))
        outputs.append(tuple(row))
    gold = [SentimentLabel.POSITIVE if g > 0 else SentimentLabel.NEGATIVE for g in gold_sign]
    return SyntheticPool([f"s{t}" for t in range(n)], gold, buckets.tolist(), outputs)


def make_bundle(
    outputs: Sequence[Sequence[RawModelOutput]],
    gold: Sequence[SentimentLabel],
    model_ids: Sequence[str],
    kinds: Sequence[ModelKind],
    text_ids: Sequence[str] | None = None,
) -> PredictionBundle:
    """Bundle straight from raw outputs, bypassing the registry (texts are empty)."""
    dists, feats = [], []
    for row in outputs:
        ds = tuple(standardize(o) for o in row)
        dists.append(ds)
        feats.append([v for kind, o, d in zip(kinds, row, ds) for v in extract_output_features(kind, o, d).values])
    schema = tuple(f"{m}:{f}" for m in model_ids for f in OUTPUT_FEATURE_SCHEMA)
    empty = extract_text_characteristics("")
    return PredictionBundle(
        tuple(model_ids),
        tuple(kinds),
        dists,
        np.array(feats, dtype=float).reshape(len(dists), len(schema)),
        schema,
        list(gold),
        [empty] * len(dists),
        list(text_ids) if text_ids is not None else [str(i) for i in range(len(dists))],
    )


def pool_bundle(pool: SyntheticPool, indices: Iterable[int] | None = None) -> PredictionBundle:
    indices = list(range(len(pool.gold)) if indices is None else indices)
    return make_bundle(
        [pool.outputs[t] for t in indices],
        [pool.gold[t] for t in indices],
        POOL_IDS,
        POOL_KINDS,
        [pool.text_ids[t] for t in indices],
    )


def toy_corpus(n: int, seed: int = 0) -> list[tuple[str, str, SentimentLabel]]:
    """Short airline-style texts with a roughly 45/25/30 negative/neutral/positive mix."""
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(n):
        u = rng.random()
        label = SentimentLabel.NEGATIVE if u < 0.45 else SentimentLabel.NEUTRAL if u < 0.70 else SentimentLabel.POSITIVE
        words = list(rng.choice(_FILLER, size=3)) + list(rng.choice(_NEUTRAL_WORDS, size=2))
        if label is SentimentLabel.POSITIVE:
            words += list(rng.choice(_POSITIVE_WORDS, size=2))
            if rng.random() < 0.2:
                words.insert(3, "not")
                words.append(str(rng.choice(_NEGATIVE_WORDS)))
        elif label is SentimentLabel.NEGATIVE:
            words += list(rng.choice(_NEGATIVE_WORDS, size=2))
            if rng.random() < 0.2:
                words.insert(3, "not")
                words.append(str(rng.choice(_POSITIVE_WORDS)))
        rng.shuffle(words)
        text = " ".join(words)
        if rng.random() < 0.15:
            text += " :)" if label is SentimentLabel.POSITIVE else " :(" if label is SentimentLabel.NEGATIVE else ""
        rows.append((f"t{t:05d}", text, label))
    return rows


def encoder_predictions(corpus: Sequence[tuple[str, str, SentimentLabel]], accuracy: float = 0.8, seed: int = 0) -> list[str]:
    """Prediction-file lines for a simulated offline encoder that is right ``accuracy`` of the time."""
    rng = np.random.default_rng(seed)
    lines = []
    for text_id, _, label in corpus:
        guess = label if rng.random() < accuracy else SentimentLabel(rng.choice([x.value for x in SentimentLabel if x is not label]))
        if guess is SentimentLabel.NEUTRAL:
            p = round(float(rng.uniform(0.45, 0.55)), 4)
        else:
            p = round(float(rng.uniform(0.7, 0.98)), 4)
            p = p if guess is SentimentLabel.POSITIVE else round(1.0 - p, 4)
        lines.append(format_prediction_line(text_id, Probabilities(p, round(1.0 - p, 4))))
    return lines


def write_demo_workspace(directory: str | Path, n: int = 300, seed: int = 0) -> Path:
    """Write a small corpus, encoder predictions and a config using the whole native pool.

    Returns the config path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = toy_corpus(n, seed)
    with (directory / "tweets.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tweet_id", "text", "airline_sentiment"])
        writer.writerows((text_id, text, label.value) for text_id, text, label in corpus)
    (directory / "encoder.tsv").write_text("\n".join(encoder_predictions(corpus, seed=seed)) + "\n", encoding="utf-8")
    config = {
        "dataset": {
            "path": "tweets.csv",
            "format": {"text_column": "text", "label_column": "airline_sentiment", "id_column": "tweet_id"},
            "label_mapping": {"negative": "negative", "neutral": "neutral", "positive": "positive"},
        },
        "models": [
            {"id": "lexicon", "kind": "lexicon"},
            {"id": "patterns", "kind": "pattern"},
            {"id": "tfidf", "kind": "machine_learning", "train": {"lambda": 0.1, "lr": 1.0, "max_iters": 300}},
            {"id": "encoder", "kind": "encoding", "predictions": "encoder.tsv"},
        ],
        "delta": 0.1,
        "split": {"ratios": [0.6, 0.2, 0.2], "seed": seed},
        "meta": {"lambda": 0.1, "lr": 0.5, "max_iters": 500},
        "curves": "always",
        "output_dir": "out",
    }
    path = directory / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path
