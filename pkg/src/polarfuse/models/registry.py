from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from polarfuse.core import (
    FeatureVector,
    ModelKind,
    PolarityDistribution,
    RawModelOutput,
    extract_output_features,
    standardize,
)
from polarfuse.errors import ConfigurationError


class SentimentModel(Protocol):
    kind: ModelKind

    def predict(self, text_id: str, text: str) -> RawModelOutput: ...


@dataclass(frozen=True)
class RegistryEntry:
    model_id: str
    kind: ModelKind
    model: SentimentModel


@dataclass(frozen=True)
class ModelOutputs:
    """What every registered model said about one text, in registry order."""

    raw: tuple[RawModelOutput, ...]
    dists: tuple[PolarityDistribution, ...]
    features: tuple[FeatureVector, ...]


class ModelRegistry:
    """Ordered model pool. The order fixes the layout of concatenated meta-features."""

    def __init__(self, entries: list[RegistryEntry] | None = None):
        self._entries: list[RegistryEntry] = []
        for entry in entries or []:
            self.register(entry.model_id, entry.kind, entry.model)

    def register(self, model_id: str, kind: ModelKind, model: SentimentModel) -> None:
        if any(e.model_id == model_id for e in self._entries):
            raise ConfigurationError(f"duplicate model id {model_id!r}")
        self._entries.append(RegistryEntry(model_id, ModelKind(kind), model))

    @property
    def entries(self) -> tuple[RegistryEntry, ...]:
        return tuple(self._entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.model_id for e in self._entries)

    @property
    def kinds(self) -> tuple[ModelKind, ...]:
        return tuple(e.kind for e in self._entries)

    def snapshot(self) -> list[dict[str, str]]:
        return [{"id": e.model_id, "kind": e.kind.value} for e in self._entries]

    def __len__(self) -> int:
        return len(self._entries)

    def run(self, text_id: str, text: str) -> ModelOutputs:
        raw, dists, feats = [], [], []
        for e in self._entries:
            out = e.model.predict(text_id, text)
            dist = standardize(out, e.model_id)
            raw.append(out)
            dists.append(dist)
            feats.append(extract_output_features(e.kind, out, dist))
        return ModelOutputs(tuple(raw), tuple(dists), tuple(feats))
