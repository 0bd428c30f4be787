"""Base-model pool: lexicon, pattern and TF-IDF models, plus offline predictions."""

from polarfuse.models.external import (
    ExternalModel,
    external_predict,
    format_prediction_line,
    load_predictions,
    parse_predictions,
)
from polarfuse.models.lexicon import LexiconModel, PolarityLexicon, default_lexicon, lexicon_predict
from polarfuse.models.patterns import Pattern, PatternModel, PatternSet, default_patterns, pattern_predict
from polarfuse.models.registry import ModelOutputs, ModelRegistry, RegistryEntry
from polarfuse.models.softmax import SoftmaxHyperparams, fit_softmax
from polarfuse.models.tfidf import (
    TfidfLinearModel,
    TfidfVocabulary,
    linear_predict,
    linear_train,
    tfidf_fit,
    tfidf_matrix,
    tfidf_transform,
    train_tfidf_model,
)

__all__ = [
    "ExternalModel",
    "LexiconModel",
    "ModelOutputs",
    "ModelRegistry",
    "Pattern",
    "PatternModel",
    "PatternSet",
    "PolarityLexicon",
    "RegistryEntry",
    "SoftmaxHyperparams",
    "TfidfLinearModel",
    "TfidfVocabulary",
    "default_lexicon",
    "default_patterns",
    "external_predict",
    "fit_softmax",
    "format_prediction_line",
    "lexicon_predict",
    "linear_predict",
    "linear_train",
    "load_predictions",
    "parse_predictions",
    "pattern_predict",
    "tfidf_fit",
    "tfidf_matrix",
    "tfidf_transform",
    "train_tfidf_model",
]
