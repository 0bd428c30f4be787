"""Fusion strategies, naive ensemble baselines, and the thresholded classifier."""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from polarfuse.core import (
    LABELS,
    CategoryDistribution,
    FeatureVector,
    LengthBucket,
    ModelKind,
    PolarityDistribution,
    SentimentLabel,
    TextCharacteristics,
)
from polarfuse.errors import ConfigurationError, InvalidWeightsError, SchemaError
from polarfuse.models.softmax import decision_scores, softmax

DEFAULT_DELTA = 0.1


# --------------------------------------------------------------------------
# Weighted averaging
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FusionWeights:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        for x in w:
            if not (math.isfinite(x) and 0.0 <= x <= 1.0):
                raise InvalidWeightsError(f"fusion weights must lie in [0, 1], got {list(w)}")
        if not sum(w) > 0:
            raise InvalidWeightsError("fusion weights sum to zero")

    @classmethod
    def equal(cls, n: int) -> "FusionWeights":
        return cls((1.0,) * n)

    def __len__(self) -> int:
        return len(self.weights)


def _weighted_mean(weights: Sequence[float], dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    if len(weights) != len(dists):
        raise ConfigurationError(f"{len(weights)} weights for {len(dists)} distributions")
    if not dists:
        raise ConfigurationError("nothing to fuse")
    # plain left-to-right sums so fuse_matrix reproduces these bits exactly
    total = 0.0
    num_pos = 0.0
    num_neg = 0.0
    for w, d in zip(weights, dists):
        total += w
        num_pos += w * d.p_pos
        num_neg += w * d.p_neg
    if not total > 0:
        raise InvalidWeightsError("fusion weights sum to zero")
    p_pos = num_pos / total
    p_neg = num_neg / total
    # rounding can push a component a hair outside [0, 1]
    p_pos = min(1.0, max(0.0, p_pos))
    p_neg = min(1.0, max(0.0, p_neg))
    return PolarityDistribution(p_pos, p_neg)


def decision_fuse(weights: FusionWeights, dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    return _weighted_mean(weights.weights, dists)


def fuse_matrix(weights: Sequence[float] | np.ndarray, p_pos: np.ndarray, p_neg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized weighted mean, bit-identical to :func:`decision_fuse`.

    ``p_pos``/``p_neg`` are ``(texts, models)``. ``weights`` is either one
    weight vector or a ``(candidates, models)`` matrix, in which case the
    outputs are ``(texts, candidates)``.
    """
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    total = np.zeros(W.shape[0])
    num_pos = np.zeros((p_pos.shape[0], W.shape[0]))
    num_neg = np.zeros_like(num_pos)
    for i in range(W.shape[1]):
        total = total + W[:, i]
        num_pos = num_pos + W[:, i] * p_pos[:, i : i + 1]
        num_neg = num_neg + W[:, i] * p_neg[:, i : i + 1]
    if np.any(~(total > 0)):
        raise InvalidWeightsError("fusion weights sum to zero")
    out_pos = np.clip(num_pos / total, 0.0, 1.0)
    out_neg = np.clip(num_neg / total, 0.0, 1.0)
    if np.ndim(weights) == 1:
        return out_pos[:, 0], out_neg[:, 0]
    return out_pos, out_neg


def classify_matrix(p_pos: np.ndarray, p_neg: np.ndarray, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Vectorized :func:`classify`, returning canonical label indices."""
    _check_delta(delta)
    out = np.full(np.shape(p_pos), SentimentLabel.NEUTRAL.rank, dtype=np.int8)
    out[p_pos > p_neg + delta] = SentimentLabel.POSITIVE.rank
    out[p_neg > p_pos + delta] = SentimentLabel.NEGATIVE.rank
    return out


def _require_nonempty(dists: Sequence[PolarityDistribution]) -> None:
    if not dists:
        raise ConfigurationError("cannot combine an empty list of distributions")


def simple_average(dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    _require_nonempty(dists)
    return decision_fuse(FusionWeights.equal(len(dists)), dists)


def confidence_weighted(dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    _require_nonempty(dists)
    return decision_fuse(FusionWeights(tuple(d.confidence for d in dists)), dists)


def median_average(dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    _require_nonempty(dists)
    m_pos = statistics.median(d.p_pos for d in dists)
    m_neg = statistics.median(d.p_neg for d in dists)
    total = m_pos + m_neg
    if total == 0:
        return PolarityDistribution(0.5, 0.5)
    p_pos = m_pos / total
    return PolarityDistribution(p_pos, 1.0 - p_pos)


def max_confidence(dists: Sequence[PolarityDistribution]) -> PolarityDistribution:
    _require_nonempty(dists)
    best = 0
    for i, d in enumerate(dists):
        if d.confidence > dists[best].confidence:
            best = i
    return dists[best]


# --------------------------------------------------------------------------
# Classification head
# --------------------------------------------------------------------------


def _check_delta(delta: float) -> None:
    if not (0.0 <= delta <= 1.0):
        raise ConfigurationError(f"confidence threshold delta must lie in [0, 1], got {delta}")


def classify(dist: PolarityDistribution, delta: float = DEFAULT_DELTA) -> SentimentLabel:
    _check_delta(delta)
    if dist.p_pos > dist.p_neg + delta:
        return SentimentLabel.POSITIVE
    if dist.p_neg > dist.p_pos + delta:
        return SentimentLabel.NEGATIVE
    return SentimentLabel.NEUTRAL


def classify_category(dist: CategoryDistribution, delta: float = DEFAULT_DELTA) -> SentimentLabel:
    """Top label when it beats the runner-up by more than ``delta``, else neutral."""
    _check_delta(delta)
    order = sorted(range(len(LABELS)), key=lambda i: (-dist.probabilities[i], i))
    top, runner_up = order[0], order[1]
    if dist.probabilities[top] - dist.probabilities[runner_up] > delta:
        return LABELS[top]
    return SentimentLabel.NEUTRAL


# --------------------------------------------------------------------------
# Majority vote
# --------------------------------------------------------------------------


def label_support(label: SentimentLabel, dist: PolarityDistribution) -> float:
    """How strongly a distribution backs ``label``; neutral is backed by balance."""
    if label is SentimentLabel.POSITIVE:
        return dist.p_pos
    if label is SentimentLabel.NEGATIVE:
        return dist.p_neg
    return 1.0 - dist.margin


def majority_vote(labels: Sequence[SentimentLabel], dists: Sequence[PolarityDistribution]) -> SentimentLabel:
    """Modal label; ties go to the higher mean support among its voters, then canonical order."""
    if not labels:
        raise ConfigurationError("majority vote needs at least one label")
    if len(labels) != len(dists):
        raise ConfigurationError(f"{len(labels)} labels for {len(dists)} distributions")
    counts = Counter(labels)
    top = max(counts.values())
    tied = [label for label in LABELS if counts.get(label, 0) == top]
    if len(tied) == 1:
        return tied[0]

    def mean_support(label: SentimentLabel) -> float:
        values = [label_support(label, d) for lab, d in zip(labels, dists) if lab is label]
        return math.fsum(values) / len(values)

    best = tied[0]
    best_support = mean_support(best)
    for label in tied[1:]:
        s = mean_support(label)
        if s > best_support:
            best, best_support = label, s
    return best


def majority_vote_dists(dists: Sequence[PolarityDistribution], delta: float = DEFAULT_DELTA) -> SentimentLabel:
    return majority_vote([classify(d, delta) for d in dists], dists)


# --------------------------------------------------------------------------
# Feature-level fusion
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetaClassifier:
    coef: np.ndarray  # (len(labels), len(schema))
    bias: np.ndarray
    schema: tuple[str, ...]
    labels: tuple[SentimentLabel, ...]
    lam: float

    def __post_init__(self):
        if self.coef.shape != (len(self.labels), len(self.schema)):
            raise SchemaError(
                f"meta-classifier coefficients have shape {self.coef.shape}, expected "
                f"({len(self.labels)}, {len(self.schema)})"
            )
        if self.bias.shape != (len(self.labels),):
            raise SchemaError("meta-classifier bias length must equal the label count")

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Canonical-order class probabilities for each row of concatenated features."""
        probs = softmax(decision_scores(self.coef, self.bias, X))
        full = np.zeros((probs.shape[0], len(LABELS)))
        for j, label in enumerate(self.labels):
            full[:, label.rank] = probs[:, j]
        return full


def feature_fuse(meta: MetaClassifier, features: Sequence[FeatureVector], model_ids: Sequence[str] | None = None) -> CategoryDistribution:
    """Concatenate per-model features in registry order and apply the meta-classifier.

    When ``model_ids`` is given the concatenated schema is checked name by
    name against the snapshot taken at training time.
    """
    values: list[float] = []
    schema: list[str] = []
    if model_ids is not None and len(model_ids) != len(features):
        raise SchemaError(f"{len(model_ids)} model ids for {len(features)} feature vectors")
    for i, vec in enumerate(features):
        values.extend(vec.values)
        if model_ids is not None:
            schema.extend(f"{model_ids[i]}:{name}" for name in vec.schema)
    if len(values) != len(meta.schema):
        raise SchemaError(f"meta-classifier expects {len(meta.schema)} features, got {len(values)}")
    if model_ids is not None and tuple(schema) != meta.schema:
        raise SchemaError("feature layout does not match the meta-classifier's schema snapshot (model order changed?)")
    row = meta.predict_matrix(np.asarray([values]))[0]
    return CategoryDistribution(_renormalized(row))


def _renormalized(row: np.ndarray) -> tuple[float, ...]:
    row = np.clip(row, 0.0, 1.0)
    return tuple((row / row.sum()).tolist())


# --------------------------------------------------------------------------
# Adaptive fusion
# --------------------------------------------------------------------------

CONDITIONS: dict[str, Callable[[TextCharacteristics, int], bool]] = {
    "has_negation": lambda c, _: c.has_negation,
    "mixed_emotions": lambda c, _: c.mixed_emotions,
    "short": lambda c, _: c.length_bucket is LengthBucket.SHORT,
    "long": lambda c, _: c.length_bucket is LengthBucket.LONG,
    "has_contrast_connective": lambda c, _: c.has_contrast_connective,
    "emotional_complexity_at_least": lambda c, t: c.emotional_complexity >= t,
}


@dataclass(frozen=True)
class AdaptiveRule:
    condition: str
    target_kind: ModelKind
    multiplier: float
    threshold: int = 0  # only read by emotional_complexity_at_least

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigurationError(f"unknown rule condition {self.condition!r} (expected one of {', '.join(CONDITIONS)})")
        object.__setattr__(self, "target_kind", ModelKind(self.target_kind))
        if not (math.isfinite(self.multiplier) and self.multiplier > 0):
            raise ConfigurationError(f"rule multiplier must be finite and > 0, got {self.multiplier}")

    def fires(self, characteristics: TextCharacteristics) -> bool:
        return CONDITIONS[self.condition](characteristics, self.threshold)

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "target_kind": self.target_kind.value,
            "multiplier": self.multiplier,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdaptiveRule":
        try:
            return cls(
                data["condition"],
                ModelKind.parse(data["target_kind"]),
                float(data["multiplier"]),
                int(data.get("threshold", 0)),
            )
        except KeyError as exc:
            raise ConfigurationError(f"adaptive rule is missing field {exc.args[0]!r}") from None


def adaptive_weights(
    rules: Sequence[AdaptiveRule], characteristics: TextCharacteristics, kinds: Sequence[ModelKind]
) -> list[float]:
    weights = [1.0] * len(kinds)
    for rule in rules:
        if not rule.fires(characteristics):
            continue
        for i, kind in enumerate(kinds):
            if kind is rule.target_kind:
                weights[i] *= rule.multiplier
    return weights


def adaptive_fuse(
    rules: Sequence[AdaptiveRule],
    characteristics: TextCharacteristics,
    kinds: Sequence[ModelKind],
    dists: Sequence[PolarityDistribution],
) -> PolarityDistribution:
    if len(kinds) != len(dists):
        raise ConfigurationError(f"{len(kinds)} model kinds for {len(dists)} distributions")
    return _weighted_mean(adaptive_weights(rules, characteristics, kinds), dists)
