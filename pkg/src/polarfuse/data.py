"""Dataset ingestion, text normalization and label standardization."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from polarfuse.core import SentimentLabel, read_tsv
from polarfuse.errors import ConfigurationError, DataError

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_SPACE_RE = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase, mask URLs and @mentions, collapse whitespace.

    Punctuation and emoji are kept; the pattern model depends on them.
    """
    text = text.lower()
    text = _URL_RE.sub(" <url> ", text)
    text = _MENTION_RE.sub("<user>", text)
    return _SPACE_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class TextRecord:
    id: str
    text: str
    normalized: str
    label: SentimentLabel | None

    @classmethod
    def make(cls, id: str, text: str, label: SentimentLabel | None = None) -> "TextRecord":
        return cls(id, text, normalize(text), label)


LabelMapping = Mapping[str, SentimentLabel]


def parse_label_mapping(raw: Mapping[str, str]) -> dict[str, SentimentLabel]:
    return {str(k): SentimentLabel.parse(v) for k, v in raw.items()}


def load_label_mapping(path: str | Path) -> dict[str, SentimentLabel]:
    path = Path(path)
    rows = read_tsv(path.read_text(encoding="utf-8").splitlines(), 2, str(path))
    return {token: SentimentLabel.parse(label) for token, label in rows}


@dataclass(frozen=True)
class DatasetFormat:
    """How to read a delimited file.

    Columns are header names when ``header`` is true and 0-based positions
    otherwise. ``id_column`` may be omitted; ids are then the 0-based data
    row index.
    """

    text_column: str | int
    label_column: str | int
    id_column: str | int | None = None
    delimiter: str = ","
    quotechar: str = '"'
    header: bool = True
    encoding: str = "utf-8"

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ConfigurationError(f"delimiter must be one character, got {self.delimiter!r}")
        if not self.header:
            for col in (self.text_column, self.label_column, self.id_column):
                if col is not None and not isinstance(col, int):
                    raise ConfigurationError(f"without a header row, columns must be integer positions (got {col!r})")


def load_dataset(path: str | Path, fmt: DatasetFormat, mapping: LabelMapping) -> list[TextRecord]:
    path = Path(path)
    records: list[TextRecord] = []
    unmapped: dict[str, int] = {}
    seen_ids: dict[str, int] = {}
    with path.open(encoding=fmt.encoding, newline="") as fh:
        reader = csv.reader(fh, delimiter=fmt.delimiter, quotechar=fmt.quotechar, strict=True)
        try:
            header = next(reader) if fmt.header else None
        except StopIteration:
            return []
        except csv.Error as exc:
            raise DataError(f"{path}:1: {exc}") from None
        positions = _resolve_columns(fmt, header, path)
        width = len(header) if header is not None else None
        row_index = 0
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
            if len(row) != width or max(p for p in positions.values() if p is not None) >= len(row):
                raise DataError(f"{path}:{line}: expected {width} fields, got {len(row)}")
            token = row[positions["label"]].strip()
            label = mapping.get(token)
            if label is None:
                unmapped.setdefault(token, line)
                row_index += 1
                continue
            if positions["id"] is not None:
                rec_id = row[positions["id"]].strip()
                if rec_id in seen_ids:
                    raise DataError(f"{path}:{line}: duplicate id {rec_id!r} (first on line {seen_ids[rec_id]})")
                seen_ids[rec_id] = line
            else:
                rec_id = str(row_index)
            records.append(TextRecord.make(rec_id, row[positions["text"]], label))
            row_index += 1
    if unmapped:
        listing = ", ".join(f"{tok!r} (line {ln})" for tok, ln in unmapped.items())
        raise DataError(f"{path}: label tokens without a mapping: {listing}")
    return records


def _resolve_columns(fmt: DatasetFormat, header: list[str] | None, path: Path) -> dict[str, int | None]:
    def resolve(col):
        if col is None:
            return None
        if header is None or isinstance(col, int):
            return int(col)
        try:
            return header.index(col)
        except ValueError:
            raise DataError(f"{path}: column {col!r} not in header {header}") from None

    return {"text": resolve(fmt.text_column), "label": resolve(fmt.label_column), "id": resolve(fmt.id_column)}


def read_text_lines(path: str | Path | None, stream=None) -> list[tuple[str, str]]:
    """Read prediction input: one text per line, optionally ``text_id<TAB>text``.

    Lines without an explicit id are numbered by 0-based line index.
    """
    if path is not None:
        with Path(path).open(encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = stream.read().splitlines()
    out = []
    for i, line in enumerate(lines):
        if "\t" in line:
            text_id, text = line.split("\t", 1)
        else:
            text_id, text = str(i), line
        out.append((text_id, text))
    return out
