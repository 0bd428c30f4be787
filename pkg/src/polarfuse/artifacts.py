"""Versioned JSON persistence for trained fusion layers.

Keys are sorted and floats are written with ``repr``, so a save/load round
trip is bit-exact and identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from polarfuse.core import ModelKind, SentimentLabel
from polarfuse.errors import CompatibilityError
from polarfuse.fusion import AdaptiveRule, FusionWeights, MetaClassifier
from polarfuse.models.tfidf import TfidfLinearModel, TfidfVocabulary

FORMAT_NAME = "polarfuse-artifact"
FORMAT_VERSION = 1
ARTIFACT_FILE = "artifact.json"


@dataclass
class TrainedArtifact:
    registry: list[dict[str, str]]
    delta: float
    strategies: list[str]
    split: dict[str, Any]
    config_digest: str
    weights: FusionWeights | None = None
    meta: MetaClassifier | None = None
    rules: list[AdaptiveRule] | None = None
    native_models: dict[str, TfidfLinearModel] = field(default_factory=dict)

    def check_registry(self, snapshot: list[dict[str, str]]) -> None:
        if snapshot != self.registry:
            raise CompatibilityError(
                f"artifact was trained for registry {_describe(self.registry)}, but the config declares {_describe(snapshot)}"
            )


def _describe(snapshot: list[dict[str, str]]) -> str:
    return "[" + ", ".join(f"{e['id']}:{e['kind']}" for e in snapshot) + "]"


def rules_to_json(rules: list[AdaptiveRule]) -> list[dict]:
    return [r.as_dict() for r in rules]


def rules_from_json(data: list[dict]) -> list[AdaptiveRule]:
    return [AdaptiveRule.from_dict(r) for r in data]


def _matrix(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def _meta_to_json(meta: MetaClassifier) -> dict:
    return {
        "labels": [label.value for label in meta.labels],
        "schema": list(meta.schema),
        "lambda": meta.lam,
        "coef": _matrix(meta.coef),
        "bias": _matrix(meta.bias),
    }


def _meta_from_json(data: dict) -> MetaClassifier:
    labels = tuple(SentimentLabel(x) for x in data["labels"])
    schema = tuple(data["schema"])
    coef = np.array(data["coef"], dtype=float).reshape(len(labels), len(schema))
    return MetaClassifier(coef, np.array(data["bias"], dtype=float), schema, labels, float(data["lambda"]))


def _tfidf_to_json(model: TfidfLinearModel) -> dict:
    return {
        "type": "tfidf_linear",
        "terms": list(model.vocabulary.terms),
        "idf": _matrix(model.vocabulary.idf),
        "ngram_max": model.vocabulary.ngram_max,
        "labels": [label.value for label in model.labels],
        "coef": _matrix(model.coef),
        "bias": _matrix(model.bias),
    }


def _tfidf_from_json(data: dict) -> TfidfLinearModel:
    vocab = TfidfVocabulary(tuple(data["terms"]), np.array(data["idf"], dtype=float), int(data["ngram_max"]))
    labels = tuple(SentimentLabel(x) for x in data["labels"])
    coef = np.array(data["coef"], dtype=float).reshape(len(labels), len(vocab))
    return TfidfLinearModel(vocab, labels, coef, np.array(data["bias"], dtype=float))


def artifact_to_json(artifact: TrainedArtifact) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "registry": artifact.registry,
        "delta": artifact.delta,
        "strategies": artifact.strategies,
        "split": artifact.split,
        "config_digest": artifact.config_digest,
        "decision_weights": list(artifact.weights.weights) if artifact.weights is not None else None,
        "meta_classifier": _meta_to_json(artifact.meta) if artifact.meta is not None else None,
        "adaptive_rules": rules_to_json(artifact.rules) if artifact.rules is not None else None,
        "native_models": {k: _tfidf_to_json(v) for k, v in artifact.native_models.items()},
    }


def artifact_from_json(data: dict) -> TrainedArtifact:
    if data.get("format") != FORMAT_NAME:
        raise CompatibilityError(f"not a {FORMAT_NAME} file")
    if data.get("version") != FORMAT_VERSION:
        raise CompatibilityError(f"unsupported artifact version {data.get('version')!r} (this build reads {FORMAT_VERSION})")
    try:
        for entry in data["registry"]:
            ModelKind(entry["kind"])
        return TrainedArtifact(
            registry=[{"id": e["id"], "kind": e["kind"]} for e in data["registry"]],
            delta=float(data["delta"]),
            strategies=list(data["strategies"]),
            split=dict(data["split"]),
            config_digest=str(data["config_digest"]),
            weights=FusionWeights(tuple(data["decision_weights"])) if data.get("decision_weights") is not None else None,
            meta=_meta_from_json(data["meta_classifier"]) if data.get("meta_classifier") is not None else None,
            rules=rules_from_json(data["adaptive_rules"]) if data.get("adaptive_rules") is not None else None,
            native_models={k: _tfidf_from_json(v) for k, v in data.get("native_models", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CompatibilityError(f"malformed artifact: {exc}") from None


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def save_artifact(artifact: TrainedArtifact, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / ARTIFACT_FILE
    path.write_text(dumps(artifact_to_json(artifact)), encoding="utf-8")
    return path


def load_artifact(path: str | Path) -> TrainedArtifact:
    path = Path(path)
    if path.is_dir():
        path = path / ARTIFACT_FILE
    if not path.exists():
        raise CompatibilityError(f"artifact not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CompatibilityError(f"{path}: invalid JSON ({exc.msg})") from None
    return artifact_from_json(data)
