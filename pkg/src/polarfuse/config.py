"""Experiment configuration: one JSON file describing data, pool and fusion.

Relative paths resolve against the directory holding the config file, and
every referenced file is checked for existence when the config is loaded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from polarfuse.core import CharacteristicsConfig, ModelKind
from polarfuse.data import DatasetFormat, load_label_mapping, parse_label_mapping
from polarfuse.errors import ConfigurationError
from polarfuse.evaluation import STRATEGIES, BucketConfig, exact_ratios
from polarfuse.fusion import DEFAULT_DELTA, AdaptiveRule
from polarfuse.models.softmax import SoftmaxHyperparams
from polarfuse.training import default_adaptive_rules

CURVE_MODES = ("auto", "always", "never")


@dataclass(frozen=True)
class DatasetConfig:
    path: Path
    format: DatasetFormat
    label_mapping: dict
    limit: int | None = None


@dataclass(frozen=True)
class ModelConfig:
    id: str
    kind: ModelKind
    predictions: Path | None = None
    lexicon: Path | None = None
    intensifiers: Path | None = None
    negation_window: int = 3
    negation_mode: str = "any"
    patterns: Path | None = None
    min_df: int = 1
    ngram_max: int = 1
    train: SoftmaxHyperparams = SoftmaxHyperparams()

    @property
    def external(self) -> bool:
        return self.predictions is not None


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple[ModelConfig, ...]
    dataset: DatasetConfig | None = None
    strategies: tuple[str, ...] = STRATEGIES
    delta: float = DEFAULT_DELTA
    adaptive_rules: tuple[AdaptiveRule, ...] = field(default_factory=lambda: tuple(default_adaptive_rules()))
    weight_step: float = 0.1
    meta: SoftmaxHyperparams = SoftmaxHyperparams()
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    characteristics: CharacteristicsConfig = CharacteristicsConfig()
    buckets: BucketConfig = BucketConfig()
    curves: str = "auto"
    predict_strategy: str | None = None
    output_dir: Path = Path("out")
    digest: str = ""

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.models)


def _get(data: dict, key: str, where: str, typ, default=...):
    if key not in data:
        if default is ...:
            raise ConfigurationError(f"{where}.{key}: required field missing")
        return default
    value = data[key]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
        raise ConfigurationError(f"{where}.{key}: expected {getattr(typ, '__name__', typ)}, got {type(value).__name__}")
    return value


def _path(base: Path, raw: str, where: str) -> Path:
    p = Path(raw)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigurationError(f"{where}: file not found: {p}")
    return p


def _hyper(data: dict | None, where: str, seed: int) -> SoftmaxHyperparams:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected an object")
    known = {"lambda", "lr", "max_iters", "tol"}
    extra = set(data) - known
    if extra:
        raise ConfigurationError(f"{where}: unknown fields {sorted(extra)}")
    try:
        return SoftmaxHyperparams(
            lam=_get(data, "lambda", where, float, 1.0),
            lr=_get(data, "lr", where, float, 0.1),
            max_iters=_get(data, "max_iters", where, int, 500),
            tol=_get(data, "tol", where, float, 1e-6),
            seed=seed,
        )
    except ConfigurationError as exc:
        if str(exc).startswith(where):
            raise
        raise ConfigurationError(f"{where}: {exc}") from None


def _column(value, where):
    if value is None or isinstance(value, (str, int)) and not isinstance(value, bool):
        return value
    raise ConfigurationError(f"{where}: column must be a name or an integer position")


def _dataset(data: dict, base: Path) -> DatasetConfig:
    where = "dataset"
    path = _path(base, _get(data, "path", where, str), f"{where}.path")
    fmt_raw = _get(data, "format", where, dict, {})
    fmt = DatasetFormat(
        text_column=_column(fmt_raw.get("text_column", "text"), f"{where}.format.text_column"),
        label_column=_column(fmt_raw.get("label_column", "label"), f"{where}.format.label_column"),
        id_column=_column(fmt_raw.get("id_column"), f"{where}.format.id_column"),
        delimiter=_get(fmt_raw, "delimiter", f"{where}.format", str, ","),
        quotechar=_get(fmt_raw, "quotechar", f"{where}.format", str, '"'),
        header=_get(fmt_raw, "header", f"{where}.format", bool, True),
        encoding=_get(fmt_raw, "encoding", f"{where}.format", str, "utf-8"),
    )
    mapping_raw = data.get("label_mapping")
    if isinstance(mapping_raw, str):
        mapping = load_label_mapping(_path(base, mapping_raw, f"{where}.label_mapping"))
    elif isinstance(mapping_raw, dict):
        try:
            mapping = parse_label_mapping(mapping_raw)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{where}.label_mapping: {exc}") from None
    else:
        raise ConfigurationError(f"{where}.label_mapping: expected an object or a path to a mapping file")
    limit = _get(data, "limit", where, int, None) if data.get("limit") is not None else None
    return DatasetConfig(path, fmt, mapping, limit)


def _model(data: dict, i: int, base: Path, seed: int) -> ModelConfig:
    where = f"models[{i}]"
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected an object")
    model_id = _get(data, "id", where, str)
    try:
        kind = ModelKind.parse(_get(data, "kind", where, str))
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}.kind: {exc}") from None
    opt = lambda key: _path(base, _get(data, key, where, str), f"{where}.{key}") if key in data else None  # noqa: E731
    predictions = opt("predictions")
    if kind is ModelKind.ENCODING and predictions is None:
        raise ConfigurationError(f"{where}: encoding models run offline; give a 'predictions' file")
    cfg = ModelConfig(
        id=model_id,
        kind=kind,
        predictions=predictions,
        lexicon=opt("lexicon"),
        intensifiers=opt("intensifiers"),
        negation_window=_get(data, "negation_window", where, int, 3),
        negation_mode=_get(data, "negation_mode", where, str, "any"),
        patterns=opt("patterns"),
        min_df=_get(data, "min_df", where, int, 1),
        ngram_max=_get(data, "ngram_max", where, int, 1),
        train=_hyper(data.get("train"), f"{where}.train", seed),
    )
    return cfg


def parse_config(data: dict[str, Any], base: Path, seed: int | None = None, out: str | Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config: top level must be an object")
    split = _get(data, "split", "config", dict, {})
    ratios = split.get("ratios", [0.8, 0.1, 0.1])
    if not (isinstance(ratios, list) and len(ratios) == 3 and all(isinstance(r, (int, float)) for r in ratios)):
        raise ConfigurationError("split.ratios: expected three numbers")
    try:
        exact_ratios(ratios)
    except ConfigurationError as exc:
        raise ConfigurationError(f"split.ratios: {exc}") from None
    if seed is None:
        seed = _get(split, "seed", "split", int, 0)

    models_raw = _get(data, "models", "config", list)
    if not models_raw:
        raise ConfigurationError("config.models: at least one model is required")
    models = tuple(_model(m, i, base, seed) for i, m in enumerate(models_raw))
    ids = [m.id for m in models]
    dupes = sorted({x for x in ids if ids.count(x) > 1})
    if dupes:
        raise ConfigurationError(f"config.models: duplicate model ids {dupes}")

    strategies = tuple(_get(data, "strategies", "config", list, list(STRATEGIES)))
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown or not strategies:
        raise ConfigurationError(f"config.strategies: unknown or empty {unknown} (choose from {list(STRATEGIES)})")
    if len(set(strategies)) != len(strategies):
        raise ConfigurationError("config.strategies: duplicates")

    delta = _get(data, "delta", "config", float, DEFAULT_DELTA)
    if not 0.0 <= delta <= 1.0:
        raise ConfigurationError(f"config.delta: must lie in [0, 1], got {delta}")

    rules_raw = data.get("adaptive_rules", "default")
    if rules_raw == "default":
        rules = tuple(default_adaptive_rules())
    elif isinstance(rules_raw, list):
        rules = []
        for i, r in enumerate(rules_raw):
            try:
                rules.append(AdaptiveRule.from_dict(r))
            except (ConfigurationError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"adaptive_rules[{i}]: {exc}") from None
        rules = tuple(rules)
    else:
        raise ConfigurationError("config.adaptive_rules: expected 'default' or a list of rules")

    chars_raw = _get(data, "characteristics", "config", dict, {})
    characteristics = CharacteristicsConfig(
        short_below=_get(chars_raw, "short_below", "characteristics", int, 8),
        long_above=_get(chars_raw, "long_above", "characteristics", int, 40),
    )
    buckets = BucketConfig(_get(chars_raw, "complexity_threshold", "characteristics", int, 4))

    curves = _get(data, "curves", "config", str, "auto")
    if curves not in CURVE_MODES:
        raise ConfigurationError(f"config.curves: expected one of {CURVE_MODES}")
    predict_strategy = _get(data, "predict_strategy", "config", str, None) if data.get("predict_strategy") else None
    if predict_strategy is not None and predict_strategy not in strategies:
        raise ConfigurationError(f"config.predict_strategy: {predict_strategy!r} is not among the configured strategies")

    output_dir = Path(out) if out is not None else base / _get(data, "output_dir", "config", str, "out")
    dataset = _dataset(_get(data, "dataset", "config", dict), base) if "dataset" in data else None

    return ExperimentConfig(
        models=models,
        dataset=dataset,
        strategies=strategies,
        delta=delta,
        adaptive_rules=rules,
        weight_step=_get(data, "weight_step", "config", float, 0.1),
        meta=_hyper(data.get("meta"), "config.meta", seed),
        ratios=tuple(float(r) for r in ratios),
        seed=seed,
        characteristics=characteristics,
        buckets=buckets,
        curves=curves,
        predict_strategy=predict_strategy,
        output_dir=output_dir,
        digest=config_digest(data, seed),
    )


def config_digest(data: dict, seed: int) -> str:
    canonical = json.dumps({"config": data, "seed": seed}, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path: str | Path, seed: int | None = None, out: str | Path | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return parse_config(data, path.parent, seed, out)
