import itertools
import math
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarfuse.core import (
    LABELS,
    OUTPUT_FEATURE_SCHEMA,
    CategoryDistribution,
    FeatureVector,
    ModelKind,
    PolarityDistribution,
    SentimentLabel,
    extract_text_characteristics,
)
from polarfuse.errors import ConfigurationError, InvalidWeightsError, SchemaError
from polarfuse.fusion import (
    AdaptiveRule,
    FusionWeights,
    MetaClassifier,
    adaptive_fuse,
    adaptive_weights,
    classify,
    classify_category,
    classify_matrix,
    confidence_weighted,
    decision_fuse,
    feature_fuse,
    fuse_matrix,
    majority_vote,
    max_confidence,
    median_average,
    simple_average,
)
from polarfuse.training import default_adaptive_rules

POS, NEG, NEU = SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL


def D(p):
    return PolarityDistribution(p, 1.0 - p)


dists = st.floats(min_value=0.0, max_value=1.0, allow_nan=False).map(D)
pools = st.lists(dists, min_size=1, max_size=6)
weight = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def vote_oracle(labels, ds):
    """Mode; ties by mean supporting probability among voters; then canonical order."""

    def support(label, d):
        return {POS: d.p_pos, NEG: d.p_neg, NEU: 1.0 - abs(d.p_pos - d.p_neg)}[label]

    candidates = []
    for label in LABELS:
        voters = [d for lab, d in zip(labels, ds) if lab == label]
        if voters:
            mean = sum(support(label, d) for d in voters) / len(voters)
            candidates.append((-len(voters), -mean, label.rank, label))
    return min(candidates)[3]


class TestWeights:
    def test_validation(self):
        with pytest.raises(InvalidWeightsError):
            FusionWeights((0.0, 0.0))
        with pytest.raises(InvalidWeightsError):
            FusionWeights((1.2, 0.5))
        with pytest.raises(ConfigurationError):
            decision_fuse(FusionWeights((1.0,)), [D(0.5), D(0.5)])


class TestDecisionFusion:
    def test_examples(self):
        out = decision_fuse(FusionWeights((1, 1)), [D(0.8), D(0.6)])
        assert out.p_pos == pytest.approx(0.7) and out.p_neg == pytest.approx(0.3)
        assert decision_fuse(FusionWeights((1, 0)), [D(0.8), PolarityDistribution(0.1, 0.9)]) == D(0.8)

    @given(pools)
    def test_equal_weights_is_simple_average_bitwise(self, ds):
        assert decision_fuse(FusionWeights.equal(len(ds)), ds) == simple_average(ds)

    @given(dists, st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=6))
    def test_identical_inputs_unchanged(self, d, ws):
        out = decision_fuse(FusionWeights(tuple(ws)), [d] * len(ws))
        assert out.p_pos == pytest.approx(d.p_pos, abs=1e-12)

    @given(st.lists(st.tuples(dists, st.floats(min_value=0.01, max_value=0.5)), min_size=1, max_size=5),
           st.floats(min_value=0.1, max_value=2.0))
    def test_scaling_keeps_argmax(self, pairs, c):
        ds = [p[0] for p in pairs]
        w = tuple(p[1] for p in pairs)
        a = decision_fuse(FusionWeights(w), ds)
        b = decision_fuse(FusionWeights(tuple(x * c for x in w)), ds)
        if abs(a.p_pos - a.p_neg) > 1e-9:
            assert (a.p_pos > a.p_neg) == (b.p_pos > b.p_neg)

    @given(pools.filter(lambda ds: len(ds) >= 2), st.data())
    def test_fuse_matrix_matches_scalar_path(self, ds, data):
        w = data.draw(st.lists(weight, min_size=len(ds), max_size=len(ds)).filter(lambda w: sum(w) > 0))
        fp, fn = fuse_matrix(w, np.array([[d.p_pos for d in ds]]), np.array([[d.p_neg for d in ds]]))
        ref = decision_fuse(FusionWeights(tuple(w)), ds)
        assert fp[0] == ref.p_pos and fn[0] == ref.p_neg


class TestNaiveRules:
    def test_examples(self):
        assert simple_average([D(1.0), D(0.0)]) == D(0.5)
        assert median_average([D(0.9), D(0.5), PolarityDistribution(0.2, 0.8)]) == D(0.5)
        assert max_confidence([D(0.6), D(0.95)]) == D(0.95)

    def test_confidence_weighted(self):
        out = confidence_weighted([D(0.9), D(0.4)])
        assert out.p_pos == pytest.approx((0.9 * 0.9 + 0.6 * 0.4) / 1.5)

    def test_max_confidence_tie_goes_to_first(self):
        assert max_confidence([D(0.8), D(0.2)]) == D(0.8)

    def test_median_even_count_renormalized(self):
        out = median_average([D(0.9), D(0.7), D(0.2), D(0.1)])
        assert out.p_pos == pytest.approx(statistics.median([0.9, 0.7, 0.2, 0.1]) / 1.0)
        assert out.p_pos + out.p_neg == pytest.approx(1.0)

    @pytest.mark.parametrize("rule", [simple_average, confidence_weighted, median_average, max_confidence])
    def test_empty(self, rule):
        with pytest.raises(ConfigurationError):
            rule([])

    @given(pools)
    def test_outputs_are_distributions(self, ds):
        for rule in (simple_average, confidence_weighted, median_average, max_confidence):
            out = rule(ds)
            assert abs(out.p_pos + out.p_neg - 1.0) <= 1e-9


class TestClassify:
    def test_examples(self):
        assert classify(D(0.6), 0.1) is POS
        assert classify(PolarityDistribution(0.55, 0.45), 0.2) is NEU
        assert classify(D(0.5), 0.0) is NEU
        assert classify(D(0.2), 0.1) is NEG
        with pytest.raises(ConfigurationError):
            classify(D(0.5), 1.5)

    @given(dists, st.floats(0, 1), st.floats(0, 1))
    def test_monotone_towards_neutral(self, d, d1, d2):
        lo, hi = sorted((d1, d2))
        if classify(d, lo) is NEU:
            assert classify(d, hi) is NEU

    @given(st.lists(dists, min_size=1, max_size=20), st.floats(0, 1))
    def test_matrix_version_agrees(self, ds, delta):
        p = np.array([d.p_pos for d in ds])
        idx = classify_matrix(p, 1.0 - p, delta)
        assert [LABELS[i] for i in idx] == [classify(d, delta) for d in ds]

    def test_category_examples(self):
        assert classify_category(CategoryDistribution((1 / 3, 1 / 3, 1 / 3)), 0.0) is NEU
        assert classify_category(CategoryDistribution((0.1, 0.2, 0.7)), 0.1) is POS
        assert classify_category(CategoryDistribution((0.4, 0.25, 0.35)), 0.1) is NEU
        assert classify_category(CategoryDistribution((0.6, 0.3, 0.1)), 0.1) is NEG


class TestMajorityVote:
    def test_examples(self):
        assert majority_vote([POS, POS, NEG], [D(0.7), D(0.7), D(0.2)]) is POS
        assert majority_vote([POS, NEG], [D(0.9), PolarityDistribution(0.4, 0.6)]) is POS

    @pytest.mark.parametrize("labels", list(itertools.product(LABELS, repeat=3)))
    def test_exhaustive_three_models(self, labels):
        support = {POS: D(0.8), NEG: D(0.3), NEU: D(0.52)}
        ds = [support[label] for label in labels]
        assert majority_vote(list(labels), ds) is vote_oracle(labels, ds)

    def test_random_five_models(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            labels = [LABELS[i] for i in rng.integers(0, 3, size=5)]
            ds = [D(float(p)) for p in np.round(rng.uniform(size=5), 1)]
            assert majority_vote(labels, ds) is vote_oracle(labels, ds)

    def test_full_tie_goes_to_canonical_order(self):
        assert majority_vote([POS, NEG], [D(0.5), D(0.5)]) is NEG

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            majority_vote([], [])


def _meta(coef, bias, n_models=1):
    schema = tuple(f"m{i}:{f}" for i in range(n_models) for f in OUTPUT_FEATURE_SCHEMA)
    return MetaClassifier(np.asarray(coef, dtype=float), np.asarray(bias, dtype=float), schema, LABELS, 1.0)


class TestFeatureFusion:
    def fv(self):
        return FeatureVector((0.7, 0.3, 0.7, 0.4, 0.4, 1, 0, 0, 0), OUTPUT_FEATURE_SCHEMA)

    def test_zero_coefficients_uniform(self):
        out = feature_fuse(_meta(np.zeros((3, 9)), np.zeros(3)), [self.fv()])
        assert out.probabilities == pytest.approx((1 / 3,) * 3)

    def test_dimension_mismatch(self):
        with pytest.raises(SchemaError):
            feature_fuse(_meta(np.zeros((3, 18)), np.zeros(3), 2), [self.fv()])

    def test_permuted_registry_rejected(self):
        meta = _meta(np.zeros((3, 18)), np.zeros(3), 2)
        feature_fuse(meta, [self.fv(), self.fv()], ["m0", "m1"])
        with pytest.raises(SchemaError):
            feature_fuse(meta, [self.fv(), self.fv()], ["m1", "m0"])

    def test_bad_shapes(self):
        with pytest.raises(SchemaError):
            _meta(np.zeros((2, 9)), np.zeros(3))

    def test_unseen_labels_get_zero(self):
        meta = MetaClassifier(np.zeros((2, 9)), np.zeros(2), OUTPUT_FEATURE_SCHEMA, (NEG, POS), 1.0)
        out = feature_fuse(meta, [self.fv()])
        assert out.probabilities == pytest.approx((0.5, 0.0, 0.5))


class TestAdaptiveFusion:
    neg = extract_text_characteristics("this is not what i expected from the airline at all today")
    plain = extract_text_characteristics("the flight left the gate at nine and landed on schedule in town")

    def test_no_rule_fires(self):
        kinds = (ModelKind.LEXICON, ModelKind.ENCODING)
        ds = [D(0.8), D(0.3)]
        assert adaptive_fuse(default_adaptive_rules(), self.plain, kinds, ds) == simple_average(ds)

    def test_negation_example(self):
        kinds = (ModelKind.LEXICON, ModelKind.ENCODING)
        assert self.neg.has_negation and not self.neg.mixed_emotions
        assert adaptive_weights(default_adaptive_rules(), self.neg, kinds) == [0.75, 1.5]
        ds = [D(0.8), D(0.2)]
        out = adaptive_fuse(default_adaptive_rules(), self.neg, kinds, ds)
        assert out.p_pos == pytest.approx((0.75 * 0.8 + 1.5 * 0.2) / 2.25)

    @given(pools)
    def test_empty_rules_is_equal_weighting(self, ds):
        kinds = [ModelKind.PATTERN] * len(ds)
        assert adaptive_fuse([], self.neg, kinds, ds) == decision_fuse(FusionWeights.equal(len(ds)), ds)

    @given(pools)
    def test_single_kind_scaling_cancels(self, ds):
        kinds = [ModelKind.ENCODING] * len(ds)
        out = adaptive_fuse(default_adaptive_rules(), self.neg, kinds, ds)
        assert out.p_pos == pytest.approx(simple_average(ds).p_pos, abs=1e-12)

    def test_rule_validation_and_round_trip(self):
        with pytest.raises(ConfigurationError):
            AdaptiveRule("sunny", ModelKind.LEXICON, 1.5)
        with pytest.raises(ConfigurationError):
            AdaptiveRule("short", ModelKind.LEXICON, -1.0)
        with pytest.raises(ConfigurationError):
            AdaptiveRule("short", ModelKind.LEXICON, math.inf)
        rules = default_adaptive_rules()
        assert [AdaptiveRule.from_dict(r.as_dict()) for r in rules] == rules

    def test_complexity_threshold(self):
        rule = AdaptiveRule("emotional_complexity_at_least", ModelKind.LEXICON, 2.0, threshold=2)
        assert rule.fires(extract_text_characteristics("happy but terrible"))
        assert not rule.fires(extract_text_characteristics("happy"))
