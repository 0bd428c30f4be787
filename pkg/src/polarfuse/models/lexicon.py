"""Lexicon scorer: averaged word polarity with intensifiers and negation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from polarfuse.core import (
    DEFAULT_NEGATION_CUES,
    ModelKind,
    RawModelOutput,
    Score,
    default_lexicon_weights,
    is_negation,
    read_tsv,
    word_tokens,
)
from polarfuse.errors import ConfigurationError

NEGATION_MODES = ("any", "parity")


@dataclass(frozen=True)
class PolarityLexicon:
    """Term weights in [-1, 1] plus valence shifters.

    ``negation_mode="any"`` flips a hit once when at least one negation cue
    sits in the window before it; ``"parity"`` flips once per cue, so two
    cues cancel out.
    """

    entries: dict[str, float]
    intensifiers: dict[str, float] = field(default_factory=dict)
    negation_window: int = 3
    negation_cues: frozenset[str] = DEFAULT_NEGATION_CUES
    negation_mode: str = "any"

    def __post_init__(self):
        for term, weight in self.entries.items():
            if not (math.isfinite(weight) and -1.0 <= weight <= 1.0):
                raise ConfigurationError(f"lexicon weight for {term!r} must lie in [-1, 1], got {weight}")
        for term, mult in self.intensifiers.items():
            if not (math.isfinite(mult) and mult > 0):
                raise ConfigurationError(f"intensifier multiplier for {term!r} must be finite and > 0, got {mult}")
        if self.negation_window < 1:
            raise ConfigurationError(f"negation window must be >= 1, got {self.negation_window}")
        if self.negation_mode not in NEGATION_MODES:
            raise ConfigurationError(f"negation_mode must be one of {NEGATION_MODES}, got {self.negation_mode!r}")


def load_weight_table(path: str | Path) -> dict[str, float]:
    path = Path(path)
    rows = read_tsv(path.read_text(encoding="utf-8").splitlines(), 2, str(path))
    table = {}
    for term, value in rows:
        try:
            table[term] = float(value)
        except ValueError:
            raise ConfigurationError(f"{path}: weight {value!r} for {term!r} is not a number") from None
    return table


@lru_cache(maxsize=None)
def default_intensifiers() -> dict[str, float]:
    text = resources.files("polarfuse.resources").joinpath("intensifiers.tsv").read_text(encoding="utf-8")
    return {term: float(m) for term, m in read_tsv(text.splitlines(), 2, "intensifiers.tsv")}


def default_lexicon(negation_window: int = 3, negation_mode: str = "any") -> PolarityLexicon:
    return PolarityLexicon(
        dict(default_lexicon_weights()),
        dict(default_intensifiers()),
        negation_window=negation_window,
        negation_mode=negation_mode,
    )


def lexicon_predict(lexicon: PolarityLexicon, text: str) -> Score:
    tokens = word_tokens(text)
    adjusted = []
    for i, tok in enumerate(tokens):
        weight = lexicon.entries.get(tok)
        if weight is None:
            continue
        window = tokens[max(0, i - lexicon.negation_window) : i]
        for prev in reversed(window):
            mult = lexicon.intensifiers.get(prev)
            if mult is not None:
                weight *= mult
                break
        n_neg = sum(is_negation(t, lexicon.negation_cues) for t in window)
        if lexicon.negation_mode == "any":
            flip = n_neg > 0
        else:
            flip = n_neg % 2 == 1
        adjusted.append(-weight if flip else weight)
    if not adjusted:
        return Score(0.0)
    s = math.fsum(adjusted) / len(adjusted)
    return Score(min(1.0, max(-1.0, s)))


class LexiconModel:
    kind = ModelKind.LEXICON

    def __init__(self, lexicon: PolarityLexicon):
        self.lexicon = lexicon

    def predict(self, text_id: str, text: str) -> RawModelOutput:
        return lexicon_predict(self.lexicon, text)
