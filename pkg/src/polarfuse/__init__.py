"""Model-agnostic fusion of heterogeneous sentiment model outputs."""

from polarfuse.core import (
    LABELS,
    CategoryDistribution,
    DiscreteLabel,
    FeatureVector,
    Logits,
    ModelKind,
    PolarityDistribution,
    Probabilities,
    Score,
    SentimentLabel,
    TextCharacteristics,
    extract_output_features,
    extract_text_characteristics,
    standardize,
)
from polarfuse.fusion import (
    AdaptiveRule,
    FusionWeights,
    MetaClassifier,
    adaptive_fuse,
    classify,
    classify_category,
    confidence_weighted,
    decision_fuse,
    feature_fuse,
    majority_vote,
    max_confidence,
    median_average,
    simple_average,
)

__version__ = "0.1.0"
