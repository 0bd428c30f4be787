from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarfuse.core import LABELS, SentimentLabel, extract_text_characteristics
from polarfuse.errors import ConfigurationError, UndefinedCurveError
from polarfuse.evaluation import (
    ConfusionMatrix,
    auc,
    characteristic_breakdown,
    compare_strategies,
    compute_metrics,
    evaluate_labels,
    largest_remainder,
    macro_f1_matrix,
    pr_points,
    read_curve,
    render_comparison,
    render_curve,
    render_summary,
    roc_points,
    stratified_split,
)
from polarfuse.fusion import FusionWeights
from polarfuse.synthetic import POOL_IDS, POOL_KINDS, complementary_pool, pool_bundle
from polarfuse.training import FusionSuite, default_adaptive_rules, train_meta_classifier, tune_decision_weights

POS, NEG, NEU = SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL


@dataclass(frozen=True)
class Rec:
    id: int
    label: SentimentLabel


def metrics_oracle(counts):
    """Precision/recall/F1 per class and their plain means, straight from the definitions."""
    k = len(counts)
    total = sum(sum(r) for r in counts)
    prec, rec, f1 = [], [], []
    for i in range(k):
        tp = counts[i][i]
        col = sum(counts[r][i] for r in range(k))
        row = sum(counts[i])
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        prec.append(p)
        rec.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    return sum(counts[i][i] for i in range(k)) / total, sum(prec) / k, sum(rec) / k, sum(f1) / k


def auc_oracle(scores):
    """Probability that a random positive outranks a random negative, ties counting half."""
    pos = [s for s, g in scores if g]
    neg = [s for s, g in scores if not g]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestSplits:
    def test_exact_proportions(self):
        records = [Rec(i, POS if i < 60 else NEG if i < 80 else NEU) for i in range(100)]
        train, val, test = stratified_split(records, (0.8, 0.1, 0.1), seed=3)
        count = lambda part, lab: sum(r.label is lab for r in part)  # noqa: E731
        assert (count(test, POS), count(test, NEG), count(test, NEU)) == (6, 2, 2)
        assert (count(train, POS), count(train, NEG), count(train, NEU)) == (48, 16, 16)

    def test_seeded(self):
        records = [Rec(i, LABELS[i % 3]) for i in range(57)]
        assert stratified_split(records, seed=5) == stratified_split(records, seed=5)
        assert stratified_split(records, seed=5) != stratified_split(records, seed=6)

    def test_partition(self):
        records = [Rec(i, LABELS[i % 3]) for i in range(31)]
        parts = stratified_split(records, (0.5, 0.25, 0.25), seed=1)
        ids = sorted(r.id for p in parts for r in p)
        assert ids == list(range(31))

    @given(st.integers(0, 500), st.sampled_from([(0.8, 0.1, 0.1), (0.7, 0.15, 0.15), (0.6, 0.2, 0.2), (1 / 3, 1 / 3, 1 / 3)]))
    def test_largest_remainder_totals(self, n, ratios):
        fr = [Fraction(r).limit_denominator(1000) for r in ratios]
        fr[-1] = 1 - fr[0] - fr[1]
        counts = largest_remainder(n, fr)
        assert sum(counts) == n
        assert all(abs(c - n * f) < 1 for c, f in zip(counts, fr))

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            stratified_split([Rec(i, POS) for i in range(10)], (0.5, 0.5, 0.5))
        with pytest.raises(ConfigurationError):
            stratified_split([Rec(0, POS), Rec(1, POS), Rec(2, NEG)])


class TestMetrics:
    def test_diagonal(self):
        m = compute_metrics(ConfusionMatrix((NEG, NEU, POS), np.diag([3, 4, 5])))
        assert (m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1) == (1.0, 1.0, 1.0, 1.0)

    def test_binary_hand_case(self):
        m = compute_metrics(ConfusionMatrix(("a", "b"), [[40, 10], [20, 30]]))
        # precision a = 40/60, b = 30/40; recall a = 40/50, b = 30/50
        assert m.accuracy == 0.7
        assert m.per_label["a"] == pytest.approx((2 / 3, 0.8, 2 * (2 / 3) * 0.8 / (2 / 3 + 0.8)), abs=1e-15)
        assert m.per_label["b"] == pytest.approx((0.75, 0.6, 2 * 0.75 * 0.6 / 1.35), abs=1e-15)
        assert m.macro_precision == pytest.approx(0.7083333333333333, abs=1e-15)
        assert m.macro_recall == pytest.approx(0.7, abs=1e-15)
        assert m.macro_f1 == pytest.approx(0.696969696969697, abs=1e-15)

    @settings(max_examples=200)
    @given(st.integers(2, 4).flatmap(lambda k: st.lists(st.lists(st.integers(0, 30), min_size=k, max_size=k), min_size=k, max_size=k)))
    def test_matches_oracle(self, counts):
        if sum(map(sum, counts)) == 0:
            return
        m = compute_metrics(ConfusionMatrix(tuple(range(len(counts))), counts))
        acc, p, r, f = metrics_oracle(counts)
        assert abs(m.accuracy - acc) <= 1e-12 and abs(m.macro_precision - p) <= 1e-12
        assert abs(m.macro_recall - r) <= 1e-12 and abs(m.macro_f1 - f) <= 1e-12

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            compute_metrics(ConfusionMatrix((POS,), [[0]]))

    def test_label_set_is_what_was_seen(self):
        m = evaluate_labels([POS, NEG], [POS, POS])
        assert set(m.per_label) == {NEG, POS}

    @given(st.lists(st.sampled_from(LABELS), min_size=1, max_size=30), st.data())
    def test_vectorized_macro_f1_is_bitwise_equal(self, gold, data):
        cols = data.draw(st.lists(st.lists(st.sampled_from(LABELS), min_size=len(gold), max_size=len(gold)), min_size=1, max_size=4))
        pred = np.array([[c[t].rank for c in cols] for t in range(len(gold))])
        fast = macro_f1_matrix(np.array([g.rank for g in gold]), pred)
        for j, c in enumerate(cols):
            assert fast[j] == evaluate_labels(gold, c).macro_f1


class TestCurves:
    def test_hand_case(self):
        scores = [(0.9, True), (0.8, False), (0.7, True), (0.1, False)]
        roc = roc_points(scores)
        assert roc.rows() == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
        assert auc(roc) == 0.75

    def test_separable(self):
        assert auc(roc_points([(0.9, True), (0.8, True), (0.3, False), (0.1, False)])) == 1.0

    def test_random_scores(self):
        rng = np.random.default_rng(0)
        scores = list(zip(rng.uniform(size=10_000).tolist(), [i % 2 == 0 for i in range(10_000)]))
        assert abs(auc(roc_points(scores)) - 0.5) <= 0.05

    @given(st.lists(st.tuples(st.integers(0, 10).map(lambda x: x / 10), st.booleans()), min_size=2, max_size=40)
           .filter(lambda s: any(g for _, g in s) and not all(g for _, g in s)))
    def test_auc_matches_rank_oracle(self, scores):
        assert auc(roc_points(scores)) == pytest.approx(auc_oracle(scores), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 1000).map(lambda x: x / 1000), st.booleans()), min_size=2, max_size=30)
           .filter(lambda s: any(g for _, g in s) and not all(g for _, g in s)))
    def test_roc_invariant_under_monotone_transform(self, scores):
        moved = [(s**3 + 2.0, g) for s, g in scores]
        assert auc(roc_points(moved)) == pytest.approx(auc(roc_points(scores)), abs=1e-12)

    def test_pr_curve(self):
        pr = pr_points([(0.9, True), (0.8, False), (0.7, True), (0.1, False)])
        assert pr.rows() == [(0.0, 1.0), (0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3), (1.0, 0.5)]

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedCurveError):
            roc_points([(0.3, True), (0.4, True)])

    def test_render_round_trip(self):
        roc = roc_points([(0.9, True), (0.8, False), (0.7, True), (0.1, False)])
        assert read_curve(render_curve(roc, "fpr", "tpr")).rows() == roc.rows()


class TestBuckets:
    chars = [
        extract_text_characteristics("not good"),
        extract_text_characteristics("happy but terrible"),
        extract_text_characteristics(" ".join(["fine"] * 50)),
    ]

    def test_all_correct(self):
        gold = [NEG, NEU, POS]
        reports = characteristic_breakdown(self.chars, gold, gold)
        assert reports and all(r.accuracy == 1.0 for r in reports.values())

    def test_empty_buckets_absent(self):
        reports = characteristic_breakdown(self.chars[:1], [NEG], [POS])
        assert set(reports) == {"negation", "short"}
        assert reports["negation"].accuracy == 0.0

    def test_membership(self):
        reports = characteristic_breakdown(self.chars, [POS] * 3, [POS] * 3)
        assert reports["short"].count == 2 and reports["long"].count == 1
        assert reports["mixed_emotions"].count == 1 and reports["complex"].count == 1


class TestComparison:
    def test_complementary_pool(self):
        pool = complementary_pool(1200, seed=4)
        val, test = pool_bundle(pool, range(600)), pool_bundle(pool, range(600, 1200))
        suite = FusionSuite(POOL_IDS, POOL_KINDS, 0.1, tune_decision_weights(val), train_meta_classifier(val),
                            default_adaptive_rules())
        results = {r.name: r for r in compare_strategies(test, suite)}
        assert results["feature_fusion"].metrics.accuracy >= results["best_individual"].metrics.accuracy + 0.05
        text = render_comparison(list(results.values()))
        assert text.splitlines()[0] == "strategy\trecall\tprecision\taccuracy\tf1\tdetail"
        assert len(text.splitlines()) == 10
        summary = render_summary(list(results.values())).splitlines()
        assert summary[1].startswith("best_individual\trecall\t")

    def test_unknown_strategy(self):
        pool = complementary_pool(30)
        b = pool_bundle(pool)
        with pytest.raises(ConfigurationError):
            compare_strategies(b, FusionSuite(POOL_IDS, POOL_KINDS), ["voodoo"])
        suite = FusionSuite(POOL_IDS, POOL_KINDS, weights=FusionWeights.equal(3))
        assert len(compare_strategies(b, suite, ["decision_fusion"])) == 1
