"""Experimental protocol: splits, metrics, curves, and strategy comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from polarfuse.core import LABELS, SentimentLabel, TextCharacteristics, LengthBucket
from polarfuse.errors import ConfigurationError, StateError, UndefinedCurveError

if TYPE_CHECKING:
    from polarfuse.data import TextRecord
    from polarfuse.training import FusionSuite, PredictionBundle


# --------------------------------------------------------------------------
# Splits
# --------------------------------------------------------------------------


def largest_remainder(n: int, ratios: Sequence[Fraction]) -> list[int]:
    """Integer allocation of ``n`` proportional to ``ratios``; leftovers go to the largest remainders."""
    quotas = [n * r for r in ratios]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def exact_ratios(ratios: Sequence[float]) -> list[Fraction]:
    fracs = [Fraction(str(r)) for r in ratios]
    if any(f < 0 for f in fracs) or sum(fracs) != 1:
        raise ConfigurationError(f"split ratios must be non-negative and sum to 1, got {list(ratios)}")
    return fracs


def stratified_split(
    records: Sequence, ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0, label_of=lambda r: r.label
) -> tuple[list, ...]:
    """Per-label largest-remainder allocation after a seeded shuffle.

    Output lists keep the input order of the records they contain.
    """
    fracs = exact_ratios(ratios)
    by_label: dict[SentimentLabel, list[int]] = {}
    for i, rec in enumerate(records):
        by_label.setdefault(label_of(rec), []).append(i)
    rng = np.random.default_rng(seed)
    assignment = [0] * len(records)
    for label in sorted(by_label):
        idx = by_label[label]
        if len(idx) < 3:
            raise ConfigurationError(f"label {label.value!r} has {len(idx)} record(s); stratified splitting needs >= 3")
        shuffled = [idx[j] for j in rng.permutation(len(idx))]
        start = 0
        for part, count in enumerate(largest_remainder(len(idx), fracs)):
            for i in shuffled[start : start + count]:
                assignment[i] = part
            start += count
    parts: tuple[list, ...] = tuple([] for _ in ratios)
    for i, rec in enumerate(records):
        parts[assignment[i]].append(rec)
    return parts


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold labels, columns are predictions."""

    labels: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        k = len(self.labels)
        if counts.shape != (k, k):
            raise ConfigurationError(f"confusion matrix must be {k}x{k}, got {counts.shape}")
        if np.any(counts < 0):
            raise ConfigurationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_labels(
        cls, gold: Sequence[SentimentLabel], predicted: Sequence[SentimentLabel], labels: Sequence | None = None
    ) -> "ConfusionMatrix":
        """Build over ``labels``; by default the canonical labels seen in gold or predictions."""
        if len(gold) != len(predicted):
            raise ConfigurationError(f"{len(gold)} gold labels but {len(predicted)} predictions")
        if labels is None:
            seen = set(gold) | set(predicted)
            labels = [label for label in LABELS if label in seen]
        pos = {label: i for i, label in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for g, p in zip(gold, predicted):
            counts[pos[g], pos[p]] += 1
        return cls(tuple(labels), counts)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_label: dict = field(default_factory=dict)  # label -> (precision, recall, f1)
    support: int = 0

    def as_row(self) -> dict[str, float]:
        return {
            "recall": self.macro_recall,
            "precision": self.macro_precision,
            "accuracy": self.accuracy,
            "f1": self.macro_f1,
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def _mean(values: Iterable[float]) -> float:
    # left-to-right sum; the vectorized tuner reproduces it exactly
    values = list(values)
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def compute_metrics(matrix: ConfusionMatrix) -> MetricsReport:
    """Macro averages over the matrix labels; an undefined ratio counts as 0."""
    counts = matrix.counts
    total = matrix.total
    if total == 0:
        raise ConfigurationError("cannot compute metrics from an empty confusion matrix")
    per_label = {}
    for i, label in enumerate(matrix.labels):
        tp = int(counts[i, i])
        precision = _ratio(tp, int(counts[:, i].sum()))
        recall = _ratio(tp, int(counts[i, :].sum()))
        per_label[label] = (precision, recall, f1_score(precision, recall))
    values = list(per_label.values())
    return MetricsReport(
        accuracy=int(np.trace(counts)) / total,
        macro_precision=_mean(v[0] for v in values),
        macro_recall=_mean(v[1] for v in values),
        macro_f1=_mean(v[2] for v in values),
        per_label=per_label,
        support=total,
    )


def evaluate_labels(gold: Sequence[SentimentLabel], predicted: Sequence[SentimentLabel]) -> MetricsReport:
    return compute_metrics(ConfusionMatrix.from_labels(gold, predicted))


def macro_f1_matrix(gold: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """Macro-F1 of many prediction columns at once, matching :func:`compute_metrics`.

    ``gold`` holds canonical label indices ``(texts,)``; ``predicted`` is
    ``(texts, candidates)``. Each candidate is scored over the labels seen in
    gold or in its own predictions.
    """
    predicted = np.asarray(predicted)
    n_cand = predicted.shape[1]
    f1_sum = np.zeros(n_cand)
    n_labels = np.zeros(n_cand)
    for k in range(len(LABELS)):
        is_gold = (gold == k)[:, None]
        is_pred = predicted == k
        tp = np.sum(is_gold & is_pred, axis=0)
        pred_count = is_pred.sum(axis=0)
        gold_count = int(is_gold.sum())
        precision = np.where(pred_count > 0, tp / np.maximum(pred_count, 1), 0.0)
        recall = tp / gold_count if gold_count > 0 else np.zeros(n_cand)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1.0), 0.0)
        present = (pred_count > 0) | (gold_count > 0)
        f1_sum = f1_sum + np.where(present, f1, 0.0)
        n_labels = n_labels + present
    return f1_sum / n_labels


# --------------------------------------------------------------------------
# Curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Curve:
    x: tuple[float, ...]
    y: tuple[float, ...]
    thresholds: tuple[float, ...]

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.x, self.y))


def _sweep(scores: Sequence[tuple[float, bool]]) -> tuple[list[float], list[int], list[int], int, int]:
    if not scores:
        raise UndefinedCurveError("no scores given")
    n_pos = sum(1 for _, g in scores if g)
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedCurveError("curves need at least one positive and one negative gold instance")
    ordered = sorted(scores, key=lambda t: -t[0])
    thresholds, tps, fps = [], [], []
    tp = fp = 0
    i = 0
    while i < len(ordered):
        s = ordered[i][0]
        while i < len(ordered) and ordered[i][0] == s:
            if ordered[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        thresholds.append(s)
        tps.append(tp)
        fps.append(fp)
    return thresholds, tps, fps, n_pos, n_neg


def roc_points(scores: Sequence[tuple[float, bool]]) -> Curve:
    """(FPR, TPR) at each distinct score, descending, starting from the origin."""
    thresholds, tps, fps, n_pos, n_neg = _sweep(scores)
    x = [0.0] + [fp / n_neg for fp in fps]
    y = [0.0] + [tp / n_pos for tp in tps]
    return Curve(tuple(x), tuple(y), (math.inf, *thresholds))


def pr_points(scores: Sequence[tuple[float, bool]]) -> Curve:
    """(recall, precision) at each distinct score; anchored at recall 0 with the first precision."""
    thresholds, tps, fps, n_pos, _ = _sweep(scores)
    recall = [tp / n_pos for tp in tps]
    precision = [tp / (tp + fp) for tp, fp in zip(tps, fps)]
    return Curve(tuple([0.0] + recall), tuple([precision[0]] + precision), (math.inf, *thresholds))


def auc(curve: Curve) -> float:
    area = 0.0
    for i in range(1, len(curve.x)):
        area += (curve.x[i] - curve.x[i - 1]) * (curve.y[i] + curve.y[i - 1]) / 2.0
    return area


# --------------------------------------------------------------------------
# Per-characteristic breakdown
# --------------------------------------------------------------------------

BUCKETS = ("negation", "short", "long", "mixed_emotions", "complex")


@dataclass(frozen=True)
class BucketConfig:
    complexity_threshold: int = 4


def bucket_membership(c: TextCharacteristics, config: BucketConfig = BucketConfig()) -> list[str]:
    out = []
    if c.has_negation:
        out.append("negation")
    if c.length_bucket is LengthBucket.SHORT:
        out.append("short")
    if c.length_bucket is LengthBucket.LONG:
        out.append("long")
    if c.mixed_emotions:
        out.append("mixed_emotions")
    if c.emotional_complexity >= config.complexity_threshold or c.has_contrast_connective:
        out.append("complex")
    return out


@dataclass(frozen=True)
class BucketReport:
    bucket: str
    count: int
    accuracy: float
    metrics: MetricsReport


def characteristic_breakdown(
    characteristics: Sequence[TextCharacteristics],
    predictions: Sequence[SentimentLabel],
    gold: Sequence[SentimentLabel],
    config: BucketConfig = BucketConfig(),
) -> dict[str, BucketReport]:
    """Accuracy per text-characteristic bucket; empty buckets are left out."""
    if not (len(characteristics) == len(predictions) == len(gold)):
        raise ConfigurationError("characteristics, predictions and gold must be aligned")
    members: dict[str, list[int]] = {b: [] for b in BUCKETS}
    for i, c in enumerate(characteristics):
        for b in bucket_membership(c, config):
            members[b].append(i)
    reports = {}
    for b in BUCKETS:
        idx = members[b]
        if not idx:
            continue
        m = evaluate_labels([gold[i] for i in idx], [predictions[i] for i in idx])
        reports[b] = BucketReport(b, len(idx), m.accuracy, m)
    return reports


# --------------------------------------------------------------------------
# Strategy comparison
# --------------------------------------------------------------------------

STRATEGIES = (
    "best_individual",
    "simple_average",
    "confidence_weighted",
    "majority_vote",
    "median_average",
    "max_confidence",
    "decision_fusion",
    "feature_fusion",
    "adaptive_fusion",
)


@dataclass(frozen=True)
class StrategyResult:
    name: str
    labels: tuple[SentimentLabel, ...]
    scores: tuple[float, ...]  # positive-class score per text, for curves
    metrics: MetricsReport
    detail: str = ""


def compare_strategies(
    bundle: "PredictionBundle",
    suite: "FusionSuite",
    strategies: Sequence[str] = STRATEGIES,
    delta: float | None = None,
) -> list[StrategyResult]:
    """One result per requested strategy, in the requested order."""
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown:
        raise ConfigurationError(f"unknown strategies {unknown} (expected a subset of {list(STRATEGIES)})")
    delta = suite.delta if delta is None else delta
    results = []
    for name in strategies:
        if not suite.is_ready(name):
            raise StateError(f"strategy {name!r} has not been trained")
        labels, scores, detail = suite.run(name, bundle, delta)
        results.append(StrategyResult(name, tuple(labels), tuple(scores), evaluate_labels(bundle.gold, labels), detail))
    return results


def format_float(x: float) -> str:
    return f"{x:.6f}"


def render_comparison(results: Sequence[StrategyResult]) -> str:
    lines = ["strategy\trecall\tprecision\taccuracy\tf1\tdetail"]
    for r in results:
        row = r.metrics.as_row()
        lines.append("\t".join([r.name, *(format_float(row[k]) for k in ("recall", "precision", "accuracy", "f1")), r.detail]))
    return "\n".join(lines) + "\n"


def render_summary(results: Sequence[StrategyResult], extra: Sequence[tuple[str, str, float]] = ()) -> str:
    lines = ["strategy\tmetric\tvalue"]
    for r in results:
        for metric, value in r.metrics.as_row().items():
            lines.append(f"{r.name}\t{metric}\t{value!r}")
    for name, metric, value in extra:
        lines.append(f"{name}\t{metric}\t{value!r}")
    return "\n".join(lines) + "\n"


def render_curve(curve: Curve, x_name: str, y_name: str) -> str:
    lines = [f"{x_name}\t{y_name}"]
    lines.extend(f"{x!r}\t{y!r}" for x, y in curve.rows())
    return "\n".join(lines) + "\n"


def read_curve(text: str) -> Curve:
    rows = [line.split("\t") for line in text.strip().splitlines()[1:]]
    xs = tuple(float(a) for a, _ in rows)
    ys = tuple(float(b) for _, b in rows)
    return Curve(xs, ys, ())


def render_buckets(per_strategy: dict[str, dict[str, BucketReport]]) -> str:
    lines = ["strategy\tbucket\tcount\taccuracy\tf1"]
    for name, reports in per_strategy.items():
        for b in BUCKETS:
            if b in reports:
                r = reports[b]
                lines.append(f"{name}\t{b}\t{r.count}\t{format_float(r.accuracy)}\t{format_float(r.metrics.macro_f1)}")
    return "\n".join(lines) + "\n"
