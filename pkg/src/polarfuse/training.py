"""Fitting the fusion layer: decision weights, meta-classifier, adaptive rules."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from polarfuse.core import (
    DEFAULT_CHARACTERISTICS,
    OUTPUT_FEATURE_SCHEMA,
    CategoryDistribution,
    CharacteristicsConfig,
    ModelKind,
    PolarityDistribution,
    SentimentLabel,
    TextCharacteristics,
    extract_text_characteristics,
)
from polarfuse.errors import ConfigurationError, StateError
from polarfuse.evaluation import evaluate_labels, macro_f1_matrix
from polarfuse.fusion import (
    DEFAULT_DELTA,
    AdaptiveRule,
    FusionWeights,
    MetaClassifier,
    adaptive_fuse,
    classify,
    classify_category,
    classify_matrix,
    confidence_weighted,
    decision_fuse,
    fuse_matrix,
    majority_vote_dists,
    max_confidence,
    median_average,
    simple_average,
)
from polarfuse.models.registry import ModelRegistry
from polarfuse.models.softmax import SoftmaxHyperparams
from polarfuse.models.tfidf import linear_train

EXACT_GRID_MAX_MODELS = 4


@dataclass
class PredictionBundle:
    """Model outputs for a batch of texts, aligned by position.

    ``dists[t][i]`` is model ``i``'s standardized output on text ``t`` and
    ``features`` is the matching concatenated meta-feature matrix.
    """

    model_ids: tuple[str, ...]
    kinds: tuple[ModelKind, ...]
    dists: list[tuple[PolarityDistribution, ...]]
    features: np.ndarray
    schema: tuple[str, ...]
    gold: list[SentimentLabel]
    characteristics: list[TextCharacteristics]
    text_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.dists)
        if not (self.features.shape[0] == n and len(self.characteristics) == n and (not self.gold or len(self.gold) == n)):
            raise ConfigurationError("bundle fields are not aligned")
        for label in self.gold:
            if not isinstance(label, SentimentLabel):
                raise ConfigurationError(f"gold label {label!r} is not canonical")

    def __len__(self) -> int:
        return len(self.dists)

    @property
    def p_pos(self) -> np.ndarray:
        return np.array([[d.p_pos for d in row] for row in self.dists]).reshape(len(self), len(self.model_ids))

    @property
    def p_neg(self) -> np.ndarray:
        return np.array([[d.p_neg for d in row] for row in self.dists]).reshape(len(self), len(self.model_ids))

    @property
    def gold_index(self) -> np.ndarray:
        return np.array([g.rank for g in self.gold], dtype=np.int8)


def build_bundle(
    registry: ModelRegistry,
    items: Sequence[tuple[str, str]],
    gold: Sequence[SentimentLabel] | None = None,
    char_config: CharacteristicsConfig = DEFAULT_CHARACTERISTICS,
) -> PredictionBundle:
    """Run every registered model over ``(text_id, normalized_text)`` pairs."""
    dists, feats, chars = [], [], []
    schema: tuple[str, ...] = ()
    for text_id, text in items:
        out = registry.run(text_id, text)
        dists.append(out.dists)
        row = []
        names = []
        for model_id, vec in zip(registry.ids, out.features):
            row.extend(vec.values)
            names.extend(f"{model_id}:{n}" for n in vec.schema)
        feats.append(row)
        schema = tuple(names)
        chars.append(extract_text_characteristics(text, char_config))
    if not schema:
        schema = tuple(f"{m}:{n}" for m in registry.ids for n in OUTPUT_FEATURE_SCHEMA)
    features = np.array(feats, dtype=float).reshape(len(items), len(schema))
    return PredictionBundle(
        registry.ids,
        registry.kinds,
        dists,
        features,
        schema,
        list(gold) if gold is not None else [],
        chars,
        [t for t, _ in items],
    )


# --------------------------------------------------------------------------
# Decision-weight tuning
# --------------------------------------------------------------------------


def _gold_support(p_pos: np.ndarray, p_neg: np.ndarray, gold: np.ndarray) -> np.ndarray:
    """Mean probability mass the fused output puts behind the gold label, per candidate."""
    g = gold[:, None]
    support = np.where(
        g == SentimentLabel.POSITIVE.rank,
        p_pos,
        np.where(g == SentimentLabel.NEGATIVE.rank, p_neg, 1.0 - np.abs(p_pos - p_neg)),
    )
    return support.mean(axis=0)


def _primitive(k: tuple[int, ...]) -> tuple[int, ...]:
    g = math.gcd(*k)
    return tuple(x // g for x in k)


def _grid_candidates(n_models: int, steps: int) -> np.ndarray:
    """One integer weight vector per distinct weight ratio, scaled as large as the grid allows."""
    reps = {}
    for k in itertools.product(range(steps + 1), repeat=n_models):
        if not any(k):
            continue
        prim = _primitive(k)
        if prim not in reps:
            scale = steps // max(prim)
            reps[prim] = tuple(x * scale for x in prim)
    return np.array(sorted(reps.values()), dtype=np.int64)


def _rank_key(f1: float, support: float, k: tuple[int, ...]):
    total = sum(k)
    norm = [Fraction(x, total) for x in k]
    mean = Fraction(1, len(k))
    variance = sum((x - mean) ** 2 for x in norm) / len(k)
    # higher F1, then more gold support, then most uniform, then lexicographic
    return (-round(f1, 12), -round(support, 12), variance, tuple(norm))


def _score_candidates(ints: np.ndarray, steps: int, P: np.ndarray, N: np.ndarray, gold: np.ndarray, delta: float, chunk: int = 2048):
    f1s, supports = [], []
    for start in range(0, len(ints), chunk):
        W = ints[start : start + chunk] / steps
        fp, fn = fuse_matrix(W, P, N)
        labels = classify_matrix(fp, fn, delta)
        f1s.append(macro_f1_matrix(gold, labels))
        supports.append(_gold_support(fp, fn, gold))
    return np.concatenate(f1s), np.concatenate(supports)


def tune_decision_weights(bundle: PredictionBundle, delta: float = DEFAULT_DELTA, step: float = 0.1) -> FusionWeights:
    """Search grid weights for the best validation macro-F1 of thresholded decision fusion.

    Pools of up to four models are searched exhaustively; larger pools use
    coordinate ascent from equal weights, which is not guaranteed optimal.
    Ties go to higher mean gold-label support, then the most uniform weights,
    then the lexicographically smallest normalized vector.
    """
    if len(bundle) == 0 or not bundle.gold:
        raise ConfigurationError("weight tuning needs a non-empty labelled bundle")
    steps_f = Fraction(str(step))
    if steps_f <= 0 or steps_f > 1 or (1 / steps_f).denominator != 1:
        raise ConfigurationError(f"grid step must divide 1 evenly, got {step}")
    steps = int(1 / steps_f)
    n = len(bundle.model_ids)
    P, N, gold = bundle.p_pos, bundle.p_neg, bundle.gold_index

    if n <= EXACT_GRID_MAX_MODELS:
        ints = _grid_candidates(n, steps)
        f1s, supports = _score_candidates(ints, steps, P, N, gold, delta)
        best = min(range(len(ints)), key=lambda i: _rank_key(f1s[i], supports[i], tuple(ints[i])))
        return FusionWeights(tuple(int(x) / steps for x in ints[best]))

    current = tuple([steps] * n)
    f1, sup = _score_candidates(np.array([current]), steps, P, N, gold, delta)
    current_key = _rank_key(f1[0], sup[0], current)
    improved = True
    while improved:
        improved = False
        for i in range(n):
            cands = [current[:i] + (v,) + current[i + 1 :] for v in range(steps + 1)]
            cands = [c for c in cands if any(c)]
            f1s, sups = _score_candidates(np.array(cands), steps, P, N, gold, delta)
            keys = [_rank_key(f1s[j], sups[j], cands[j]) for j in range(len(cands))]
            j = min(range(len(cands)), key=keys.__getitem__)
            if keys[j] < current_key:
                current, current_key, improved = cands[j], keys[j], True
    return FusionWeights(tuple(x / steps for x in current))


# --------------------------------------------------------------------------
# Meta-classifier and rules
# --------------------------------------------------------------------------


def train_meta_classifier(bundle: PredictionBundle, params: SoftmaxHyperparams = SoftmaxHyperparams()) -> MetaClassifier:
    observed, fit = linear_train(bundle.features, bundle.gold, params)
    return MetaClassifier(fit.coef, fit.bias, bundle.schema, observed, params.lam)


def default_adaptive_rules() -> list[AdaptiveRule]:
    """Encoders gain weight on negation and mixed emotions, lexicons on short texts."""
    return [
        AdaptiveRule("has_negation", ModelKind.ENCODING, 1.5),
        AdaptiveRule("mixed_emotions", ModelKind.ENCODING, 1.5),
        AdaptiveRule("short", ModelKind.LEXICON, 1.5),
        AdaptiveRule("has_negation", ModelKind.LEXICON, 0.75),
    ]


# --------------------------------------------------------------------------
# Running every strategy over a bundle
# --------------------------------------------------------------------------

_NAIVE = {
    "simple_average": simple_average,
    "confidence_weighted": confidence_weighted,
    "median_average": median_average,
    "max_confidence": max_confidence,
}


@dataclass
class FusionSuite:
    """The trained fusion layer for one model pool."""

    model_ids: tuple[str, ...]
    kinds: tuple[ModelKind, ...]
    delta: float = DEFAULT_DELTA
    weights: FusionWeights | None = None
    meta: MetaClassifier | None = None
    rules: list[AdaptiveRule] | None = None

    def is_ready(self, name: str) -> bool:
        if name == "decision_fusion":
            return self.weights is not None
        if name == "feature_fusion":
            return self.meta is not None
        if name == "adaptive_fusion":
            return self.rules is not None
        return True

    def _check(self, bundle: PredictionBundle) -> None:
        if tuple(bundle.model_ids) != tuple(self.model_ids) or tuple(bundle.kinds) != tuple(self.kinds):
            raise ConfigurationError("bundle was produced by a different model registry")

    def fused(self, name: str, bundle: PredictionBundle, t: int) -> PolarityDistribution:
        """Polarity distribution for text ``t`` under a weighting strategy."""
        dists = bundle.dists[t]
        if name in _NAIVE:
            return _NAIVE[name](dists)
        if name == "decision_fusion":
            return decision_fuse(self.weights, dists)
        if name == "adaptive_fusion":
            return adaptive_fuse(self.rules, bundle.characteristics[t], self.kinds, dists)
        raise ConfigurationError(f"{name!r} does not produce a polarity distribution")

    def run(self, name: str, bundle: PredictionBundle, delta: float | None = None) -> tuple[list[SentimentLabel], list[float], str]:
        """Labels, positive-class scores and a short description for every text."""
        if not self.is_ready(name):
            raise StateError(f"strategy {name!r} has not been trained")
        self._check(bundle)
        delta = self.delta if delta is None else delta
        if name == "best_individual":
            return self._best_individual(bundle, delta)
        if name == "majority_vote":
            labels = [majority_vote_dists(d, delta) for d in bundle.dists]
            scores = [sum(classify(x, delta) is SentimentLabel.POSITIVE for x in d) / len(d) for d in bundle.dists]
            return labels, scores, ""
        if name == "feature_fusion":
            probs = self.meta.predict_matrix(bundle.features)
            labels = []
            for row in probs:
                row = np.clip(row, 0.0, 1.0)
                labels.append(classify_category(CategoryDistribution(tuple((row / row.sum()).tolist())), delta))
            return labels, probs[:, SentimentLabel.POSITIVE.rank].tolist(), ""
        fused = [self.fused(name, bundle, t) for t in range(len(bundle))]
        detail = ""
        if name == "decision_fusion":
            detail = "weights=" + ",".join(f"{w:g}" for w in self.weights.weights)
        return [classify(d, delta) for d in fused], [d.p_pos for d in fused], detail

    def individual(self, i: int, bundle: PredictionBundle, delta: float) -> tuple[list[SentimentLabel], list[float]]:
        col = [row[i] for row in bundle.dists]
        return [classify(d, delta) for d in col], [d.p_pos for d in col]

    def _best_individual(self, bundle: PredictionBundle, delta: float):
        best = None
        for i, model_id in enumerate(self.model_ids):
            labels, scores = self.individual(i, bundle, delta)
            f1 = evaluate_labels(bundle.gold, labels).macro_f1
            if best is None or f1 > best[0]:
                best = (f1, labels, scores, model_id)
        return best[1], best[2], f"model={best[3]}"
