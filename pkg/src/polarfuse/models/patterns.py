"""Pattern scorer: weighted mean polarity of matched phrases and emoji."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from polarfuse.core import ModelKind, RawModelOutput, Score, read_tsv, tokenize
from polarfuse.errors import ConfigurationError


@dataclass(frozen=True)
class Pattern:
    literal: str
    polarity: float
    weight: float

    def __post_init__(self):
        if not (math.isfinite(self.polarity) and -1.0 <= self.polarity <= 1.0):
            raise ConfigurationError(f"pattern {self.literal!r}: polarity must lie in [-1, 1], got {self.polarity}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ConfigurationError(f"pattern {self.literal!r}: weight must be > 0, got {self.weight}")
        if not tokenize(self.literal):
            raise ConfigurationError(f"pattern {self.literal!r} has no tokens")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tokenize(self.literal))


@dataclass(frozen=True)
class PatternSet:
    patterns: tuple[Pattern, ...]


def parse_patterns(lines, source: str) -> PatternSet:
    patterns = []
    for literal, polarity, weight in read_tsv(lines, 3, source):
        try:
            patterns.append(Pattern(literal.lower(), float(polarity), float(weight)))
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"{source}: bad numeric field in pattern {literal!r}") from None
    return PatternSet(tuple(patterns))


def load_patterns(path: str | Path) -> PatternSet:
    path = Path(path)
    return parse_patterns(path.read_text(encoding="utf-8").splitlines(), str(path))


def default_patterns() -> PatternSet:
    text = resources.files("polarfuse.resources").joinpath("patterns.tsv").read_text(encoding="utf-8")
    return parse_patterns(text.splitlines(), "patterns.tsv")


def count_matches(needle: tuple[str, ...], haystack: list[str]) -> int:
    k = len(needle)
    return sum(1 for i in range(len(haystack) - k + 1) if tuple(haystack[i : i + k]) == needle)


def pattern_predict(patterns: PatternSet, text: str) -> Score:
    """Matches are token-sequence occurrences, so ``":)"`` and multi-word idioms work alike."""
    tokens = tokenize(text)
    num = []
    den = []
    for pattern in patterns.patterns:
        hits = count_matches(pattern.tokens, tokens)
        if hits:
            num.append(pattern.polarity * pattern.weight * hits)
            den.append(pattern.weight * hits)
    if not den:
        return Score(0.0)
    s = math.fsum(num) / math.fsum(den)
    return Score(min(1.0, max(-1.0, s)))


class PatternModel:
    kind = ModelKind.PATTERN

    def __init__(self, patterns: PatternSet):
        self.patterns = patterns

    def predict(self, text_id: str, text: str) -> RawModelOutput:
        return pattern_predict(self.patterns, text)
