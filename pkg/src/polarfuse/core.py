"""Domain types, output standardization, and feature extraction.

Every base model emits one of four raw output shapes. :func:`standardize`
maps each of them onto a two-way polarity distribution, which is the common
currency of all fusion strategies. :func:`extract_output_features` turns an
output into a fixed-width feature row for the meta-classifier, and
:func:`extract_text_characteristics` summarizes the text itself for the
rule-based adaptive weights.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable, Union

from polarfuse.errors import ConfigurationError, InvalidOutputError

DIST_TOL = 1e-9


class SentimentLabel(str, Enum):
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    POSITIVE = "positive"

    @property
    def rank(self) -> int:
        return _LABEL_RANK[self]

    def __lt__(self, other):
        if not isinstance(other, SentimentLabel):
            return NotImplemented
        return self.rank < other.rank

    @classmethod
    def parse(cls, token: str) -> "SentimentLabel":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown sentiment label {token!r}") from None


LABELS: tuple[SentimentLabel, ...] = (
    SentimentLabel.NEGATIVE,
    SentimentLabel.NEUTRAL,
    SentimentLabel.POSITIVE,
)
_LABEL_RANK = {label: i for i, label in enumerate(LABELS)}


class ModelKind(str, Enum):
    LEXICON = "lexicon"
    PATTERN = "pattern"
    MACHINE_LEARNING = "machine_learning"
    ENCODING = "encoding"

    @classmethod
    def parse(cls, token: str) -> "ModelKind":
        try:
            return cls(token)
        except ValueError:
            kinds = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"unknown model kind {token!r} (expected one of {kinds})") from None


MODEL_KINDS: tuple[ModelKind, ...] = tuple(ModelKind)


# --------------------------------------------------------------------------
# Raw model outputs
# --------------------------------------------------------------------------


def _require_finite(variant: str, **values: float) -> None:
    for name, value in values.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise InvalidOutputError(f"{variant}: {name}={value!r} is not a finite number")


@dataclass(frozen=True)
class Probabilities:
    p_pos: float
    p_neg: float

    def __post_init__(self):
        _require_finite("Probabilities", p_pos=self.p_pos, p_neg=self.p_neg)
        if not (0.0 <= self.p_pos <= 1.0 and 0.0 <= self.p_neg <= 1.0):
            raise InvalidOutputError(f"Probabilities: components must lie in [0, 1], got {self.p_pos}, {self.p_neg}")
        if abs(self.p_pos + self.p_neg - 1.0) > DIST_TOL:
            raise InvalidOutputError(f"Probabilities: components sum to {self.p_pos + self.p_neg}, not 1")


@dataclass(frozen=True)
class Score:
    s: float

    def __post_init__(self):
        _require_finite("Score", s=self.s)
        if not -1.0 <= self.s <= 1.0:
            raise InvalidOutputError(f"Score: s={self.s} outside [-1, 1]")


@dataclass(frozen=True)
class Logits:
    v_pos: float
    v_neg: float

    def __post_init__(self):
        _require_finite("Logits", v_pos=self.v_pos, v_neg=self.v_neg)


@dataclass(frozen=True)
class DiscreteLabel:
    label: SentimentLabel

    def __post_init__(self):
        if not isinstance(self.label, SentimentLabel):
            raise InvalidOutputError(f"DiscreteLabel: {self.label!r} is not a SentimentLabel")


RawModelOutput = Union[Probabilities, Score, Logits, DiscreteLabel]


# --------------------------------------------------------------------------
# Distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarityDistribution:
    p_pos: float
    p_neg: float

    def __post_init__(self):
        if not (0.0 <= self.p_pos <= 1.0 and 0.0 <= self.p_neg <= 1.0):
            raise InvalidOutputError(f"polarity components must lie in [0, 1], got {self.p_pos}, {self.p_neg}")
        if abs(self.p_pos + self.p_neg - 1.0) > DIST_TOL:
            raise InvalidOutputError(f"polarity components sum to {self.p_pos + self.p_neg}, not 1")

    @property
    def confidence(self) -> float:
        return max(self.p_pos, self.p_neg)

    @property
    def margin(self) -> float:
        return abs(self.p_pos - self.p_neg)


@dataclass(frozen=True)
class CategoryDistribution:
    """Probabilities over all canonical labels, stored in :data:`LABELS` order."""

    probabilities: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if len(probs) != len(LABELS):
            raise InvalidOutputError(f"expected {len(LABELS)} category probabilities, got {len(probs)}")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise InvalidOutputError(f"category probabilities must lie in [0, 1], got {probs}")
        if abs(math.fsum(probs) - 1.0) > DIST_TOL:
            raise InvalidOutputError(f"category probabilities sum to {math.fsum(probs)}, not 1")

    @classmethod
    def from_mapping(cls, mapping: dict[SentimentLabel, float]) -> "CategoryDistribution":
        return cls(tuple(float(mapping.get(label, 0.0)) for label in LABELS))

    def items(self) -> list[tuple[SentimentLabel, float]]:
        return list(zip(LABELS, self.probabilities))

    def __getitem__(self, label: SentimentLabel) -> float:
        return self.probabilities[label.rank]


# --------------------------------------------------------------------------
# Standardization
# --------------------------------------------------------------------------


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def standardize(output: RawModelOutput, model_id: str | None = None) -> PolarityDistribution:
    """Map a raw model output onto a polarity distribution.

    Logits are squashed independently and the pair is renormalized, so the
    result is a proper distribution with the same argmax as the logits.
    """
    where = f"model {model_id!r}: " if model_id else ""
    try:
        if isinstance(output, Probabilities):
            _require_finite("Probabilities", p_pos=output.p_pos, p_neg=output.p_neg)
            return PolarityDistribution(output.p_pos, output.p_neg)
        if isinstance(output, Score):
            _require_finite("Score", s=output.s)
            return PolarityDistribution((1.0 + output.s) / 2.0, (1.0 - output.s) / 2.0)
        if isinstance(output, Logits):
            _require_finite("Logits", v_pos=output.v_pos, v_neg=output.v_neg)
            a, b = sigmoid(output.v_pos), sigmoid(output.v_neg)
            total = a + b
            if total == 0.0:
                # both logits hugely negative; fall back on the difference
                p = sigmoid(output.v_pos - output.v_neg)
                return PolarityDistribution(p, 1.0 - p)
            p_pos = a / total
            return PolarityDistribution(p_pos, 1.0 - p_pos)
        if isinstance(output, DiscreteLabel):
            if output.label is SentimentLabel.POSITIVE:
                return PolarityDistribution(1.0, 0.0)
            if output.label is SentimentLabel.NEGATIVE:
                return PolarityDistribution(0.0, 1.0)
            return PolarityDistribution(0.5, 0.5)
    except InvalidOutputError as exc:
        raise InvalidOutputError(f"{where}{exc}") from None
    raise InvalidOutputError(f"{where}unsupported output type {type(output).__name__}")


# --------------------------------------------------------------------------
# Output features
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema: tuple[str, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "schema", tuple(self.schema))
        if len(values) != len(self.schema):
            raise InvalidOutputError(f"feature vector has {len(values)} values but {len(self.schema)} names")
        if not all(math.isfinite(v) for v in values):
            raise InvalidOutputError("feature vector contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


OUTPUT_FEATURE_SCHEMA: tuple[str, ...] = (
    "p_pos",
    "p_neg",
    "confidence",
    "margin",
    "raw_scalar",
    *(f"kind_{k.value}" for k in MODEL_KINDS),
)


def extract_output_features(
    kind: ModelKind, output: RawModelOutput, dist: PolarityDistribution
) -> FeatureVector:
    if isinstance(output, Score):
        raw = output.s
    elif isinstance(output, Logits):
        raw = output.v_pos - output.v_neg
    else:
        raw = dist.p_pos - dist.p_neg
    one_hot = [1.0 if k is kind else 0.0 for k in MODEL_KINDS]
    values = (dist.p_pos, dist.p_neg, dist.confidence, dist.margin, raw, *one_hot)
    return FeatureVector(values, OUTPUT_FEATURE_SCHEMA)


def concat_features(model_ids: Iterable[str], vectors: Iterable[FeatureVector]) -> FeatureVector:
    values: list[float] = []
    schema: list[str] = []
    for model_id, vec in zip(model_ids, vectors, strict=True):
        values.extend(vec.values)
        schema.extend(f"{model_id}:{name}" for name in vec.schema)
    return FeatureVector(tuple(values), tuple(schema))


# --------------------------------------------------------------------------
# Tokenization and text characteristics
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"<url>|<user>|\w+(?:'\w+)*|[^\w\s]")

DEFAULT_NEGATION_CUES = frozenset({"not", "no", "never", "neither", "nor", "cannot", "n't", "without"})
DEFAULT_CONTRAST_CUES = frozenset({"but", "however", "although", "yet"})


def tokenize(text: str) -> list[str]:
    """Whitespace-plus-punctuation split; each symbol or emoji is its own token."""
    return _TOKEN_RE.findall(text)


def word_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t[0].isalnum() or t[0] == "_"]


def is_negation(token: str, cues: frozenset[str] = DEFAULT_NEGATION_CUES) -> bool:
    if token in cues:
        return True
    return "n't" in cues and token.endswith("n't")


def read_tsv(lines: Iterable[str], n_fields: int, source: str) -> list[list[str]]:
    """Parse tab-separated fixture lines, skipping blanks and ``#`` comments."""
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != n_fields:
            raise ConfigurationError(f"{source}:{lineno}: expected {n_fields} tab-separated fields, got {len(fields)}")
        rows.append(fields)
    return rows


@lru_cache(maxsize=None)
def default_lexicon_weights() -> dict[str, float]:
    text = resources.files("polarfuse.resources").joinpath("lexicon.tsv").read_text(encoding="utf-8")
    rows = read_tsv(text.splitlines(), 2, "lexicon.tsv")
    return {term: float(weight) for term, weight in rows}


class LengthBucket(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


@dataclass(frozen=True)
class TextCharacteristics:
    token_count: int
    has_negation: bool
    positive_cue_count: int
    negative_cue_count: int
    emotional_complexity: int
    mixed_emotions: bool
    has_contrast_connective: bool
    length_bucket: LengthBucket

    def as_dict(self) -> dict:
        return {
            "token_count": self.token_count,
            "has_negation": self.has_negation,
            "positive_cue_count": self.positive_cue_count,
            "negative_cue_count": self.negative_cue_count,
            "emotional_complexity": self.emotional_complexity,
            "mixed_emotions": self.mixed_emotions,
            "has_contrast_connective": self.has_contrast_connective,
            "length_bucket": self.length_bucket.value,
        }


@dataclass(frozen=True)
class CharacteristicsConfig:
    short_below: int = 8
    long_above: int = 40
    negation_cues: frozenset[str] = DEFAULT_NEGATION_CUES
    contrast_cues: frozenset[str] = DEFAULT_CONTRAST_CUES
    lexicon: dict[str, float] | None = None

    def __post_init__(self):
        if self.short_below < 0 or self.long_above < self.short_below:
            raise ConfigurationError(
                f"length thresholds must satisfy 0 <= short_below <= long_above, got {self.short_below}, {self.long_above}"
            )

    def bucket(self, token_count: int) -> LengthBucket:
        if token_count < self.short_below:
            return LengthBucket.SHORT
        if token_count > self.long_above:
            return LengthBucket.LONG
        return LengthBucket.MEDIUM


DEFAULT_CHARACTERISTICS = CharacteristicsConfig()


def extract_text_characteristics(
    text: str, config: CharacteristicsConfig = DEFAULT_CHARACTERISTICS
) -> TextCharacteristics:
    lexicon = config.lexicon if config.lexicon is not None else default_lexicon_weights()
    tokens = word_tokens(text)
    pos = neg = 0
    polar_terms = set()
    for tok in tokens:
        weight = lexicon.get(tok, 0.0)
        if weight > 0:
            pos += 1
        elif weight < 0:
            neg += 1
        if weight != 0:
            polar_terms.add(tok)
    return TextCharacteristics(
        token_count=len(tokens),
        has_negation=any(is_negation(t, config.negation_cues) for t in tokens),
        positive_cue_count=pos,
        negative_cue_count=neg,
        emotional_complexity=len(polar_terms),
        mixed_emotions=pos > 0 and neg > 0,
        has_contrast_connective=any(t in config.contrast_cues for t in tokens),
        length_bucket=config.bucket(len(tokens)),
    )
