"""Adapter for model outputs computed offline (e.g. fine-tuned transformers).

Prediction files hold one record per line, tab-separated::

    text_id  prob    p_pos  p_neg
    text_id  score   s
    text_id  logits  v_pos  v_neg
    text_id  label   negative|neutral|positive

Blank lines and ``#`` comments are ignored. Duplicate ids are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

from polarfuse.core import (
    DiscreteLabel,
    Logits,
    ModelKind,
    Probabilities,
    RawModelOutput,
    Score,
    SentimentLabel,
)
from polarfuse.errors import DataError, InvalidOutputError, MissingPredictionError

_ARITY = {"prob": 2, "score": 1, "logits": 2, "label": 1}


def parse_prediction_line(fields: list[str]) -> RawModelOutput:
    kind, payload = fields[0], fields[1:]
    if kind not in _ARITY:
        raise DataError(f"unknown output kind {kind!r} (expected one of {', '.join(_ARITY)})")
    if len(payload) != _ARITY[kind]:
        raise DataError(f"{kind} output takes {_ARITY[kind]} value(s), got {len(payload)}")
    if kind == "label":
        try:
            return DiscreteLabel(SentimentLabel(payload[0].strip().lower()))
        except ValueError:
            raise DataError(f"unknown label {payload[0]!r}") from None
    try:
        nums = [float(x) for x in payload]
    except ValueError:
        raise DataError(f"non-numeric payload {payload!r}") from None
    if kind == "prob":
        return Probabilities(*nums)
    if kind == "score":
        return Score(nums[0])
    return Logits(*nums)


def format_prediction_line(text_id: str, output: RawModelOutput) -> str:
    if isinstance(output, Probabilities):
        body = ["prob", repr(output.p_pos), repr(output.p_neg)]
    elif isinstance(output, Score):
        body = ["score", repr(output.s)]
    elif isinstance(output, Logits):
        body = ["logits", repr(output.v_pos), repr(output.v_neg)]
    else:
        body = ["label", output.label.value]
    return "\t".join([text_id, *body])


def parse_predictions(lines: Iterable[str], source: str = "<predictions>") -> dict[str, RawModelOutput]:
    table: dict[str, RawModelOutput] = {}
    first_seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise DataError(f"{source}:{lineno}: expected text_id, output kind and payload")
        text_id = fields[0]
        if text_id in table:
            raise DataError(f"{source}:{lineno}: duplicate text_id {text_id!r} (first seen on line {first_seen[text_id]})")
        try:
            table[text_id] = parse_prediction_line(fields[1:])
        except (DataError, InvalidOutputError) as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from None
        first_seen[text_id] = lineno
    return table


def load_predictions(path: str | Path) -> dict[str, RawModelOutput]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_predictions(fh, str(path))


def external_predict(table: Mapping[str, RawModelOutput], text_id: str, model_id: str = "<external>") -> RawModelOutput:
    try:
        return table[text_id]
    except KeyError:
        raise MissingPredictionError(f"model {model_id!r} has no prediction for text_id {text_id!r}") from None


class ExternalModel:
    def __init__(self, model_id: str, kind: ModelKind, table: Mapping[str, RawModelOutput]):
        self.model_id = model_id
        self.kind = kind
        self.table = table

    def predict(self, text_id: str, text: str) -> RawModelOutput:
        return external_predict(self.table, text_id, self.model_id)
