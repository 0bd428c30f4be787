"""TF-IDF features with a multinomial logistic classifier on top."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from polarfuse.core import LABELS, FeatureVector, Logits, ModelKind, RawModelOutput, SentimentLabel, word_tokens
from polarfuse.errors import ConfigurationError, DegenerateDataError, StateError
from polarfuse.models.softmax import SoftmaxFit, SoftmaxHyperparams, decision_scores, fit_softmax


def ngrams(text: str, ngram_max: int = 1) -> list[str]:
    tokens = word_tokens(text)
    grams = list(tokens)
    for n in range(2, ngram_max + 1):
        grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


@dataclass(frozen=True, eq=False)
class TfidfVocabulary:
    terms: tuple[str, ...]
    idf: np.ndarray
    ngram_max: int = 1
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.terms) != len(self.idf):
            raise ConfigurationError("vocabulary and idf lengths differ")
        if not np.all(np.isfinite(self.idf)):
            raise ConfigurationError("idf values must be finite")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)


def tfidf_fit(corpus: Sequence[str], min_df: int = 1, ngram_max: int = 1) -> TfidfVocabulary:
    """Smoothed idf, ``ln((N + 1) / (df + 1)) + 1``, over terms with ``df >= min_df``."""
    if len(corpus) == 0:
        raise ConfigurationError("cannot fit TF-IDF on an empty corpus")
    if min_df < 1:
        raise ConfigurationError(f"min_df must be >= 1, got {min_df}")
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(ngrams(doc, ngram_max)))
    n = len(corpus)
    terms = tuple(sorted(t for t, c in df.items() if c >= min_df))
    idf = np.array([math.log((n + 1) / (df[t] + 1)) + 1.0 for t in terms])
    return TfidfVocabulary(terms, idf, ngram_max)


def tfidf_matrix(vocab: TfidfVocabulary, texts: Sequence[str]) -> sp.csr_matrix:
    index = vocab.index
    rows, cols, vals = [], [], []
    for r, text in enumerate(texts):
        counts = Counter(g for g in ngrams(text, vocab.ngram_max) if g in index)
        if not counts:
            continue
        idx = np.array([index[g] for g in counts])
        w = np.array(list(counts.values()), dtype=float) * vocab.idf[idx]
        w /= np.sqrt(np.sum(w * w))
        rows.extend([r] * len(idx))
        cols.extend(idx.tolist())
        vals.extend(w.tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(texts), len(vocab)))


def tfidf_transform(vocab: TfidfVocabulary, text: str) -> FeatureVector:
    dense = tfidf_matrix(vocab, [text]).toarray()[0]
    return FeatureVector(tuple(dense.tolist()), vocab.terms)


@dataclass
class TfidfLinearModel:
    vocabulary: TfidfVocabulary
    labels: tuple[SentimentLabel, ...]
    coef: np.ndarray
    bias: np.ndarray

    kind = ModelKind.MACHINE_LEARNING

    def __post_init__(self):
        if self.coef.shape != (len(self.labels), len(self.vocabulary)):
            raise ConfigurationError(
                f"coefficient shape {self.coef.shape} inconsistent with {len(self.labels)} labels "
                f"and {len(self.vocabulary)} terms"
            )
        if self.bias.shape != (len(self.labels),):
            raise ConfigurationError("bias length must equal the label count")

    def scores(self, texts: Sequence[str]) -> np.ndarray:
        return decision_scores(self.coef, self.bias, tfidf_matrix(self.vocabulary, texts))

    def predict(self, text_id: str, text: str) -> RawModelOutput:
        return linear_predict(self, text)


def linear_train(
    vectors,
    labels: Sequence[SentimentLabel],
    params: SoftmaxHyperparams = SoftmaxHyperparams(),
) -> tuple[tuple[SentimentLabel, ...], SoftmaxFit]:
    """Fit the regularized multinomial model; classes are the observed labels in canonical order."""
    observed = tuple(label for label in LABELS if label in set(labels))
    if len(observed) < 2:
        raise DegenerateDataError(f"need at least two distinct labels, got {[l.value for l in observed]}")
    pos = {label: i for i, label in enumerate(observed)}
    y = np.array([pos[label] for label in labels])
    return observed, fit_softmax(vectors, y, len(observed), params)


def train_tfidf_model(
    texts: Sequence[str],
    labels: Sequence[SentimentLabel],
    min_df: int = 1,
    ngram_max: int = 1,
    params: SoftmaxHyperparams = SoftmaxHyperparams(),
) -> TfidfLinearModel:
    vocab = tfidf_fit(texts, min_df, ngram_max)
    observed, fit = linear_train(tfidf_matrix(vocab, texts), labels, params)
    if SentimentLabel.POSITIVE not in observed or SentimentLabel.NEGATIVE not in observed:
        raise DegenerateDataError("TF-IDF model needs both positive and negative training examples")
    return TfidfLinearModel(vocab, observed, fit.coef, fit.bias)


def linear_predict(model: TfidfLinearModel | None, text: str) -> Logits:
    """Positive/negative decision scores; a neutral row, if any, is not part of the output."""
    if model is None or model.coef is None:
        raise StateError("linear model has not been trained")
    row = model.scores([text])[0]
    return Logits(float(row[model.labels.index(SentimentLabel.POSITIVE)]),
                  float(row[model.labels.index(SentimentLabel.NEGATIVE)]))
