"""Command-line front end: ``train``, ``evaluate``, ``predict``, ``characteristics``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence, TextIO

from polarfuse import artifacts
from polarfuse.artifacts import TrainedArtifact
from polarfuse.config import ExperimentConfig, ModelConfig, load_config
from polarfuse.core import (
    CharacteristicsConfig,
    FeatureVector,
    ModelKind,
    SentimentLabel,
    default_lexicon_weights,
    extract_text_characteristics,
)
from polarfuse.data import TextRecord, load_dataset, normalize, read_text_lines
from polarfuse.errors import ConfigurationError, MissingPredictionError, PolarFuseError, StateError
from polarfuse.evaluation import (
    BucketConfig,
    auc,
    bucket_membership,
    characteristic_breakdown,
    compare_strategies,
    pr_points,
    render_buckets,
    render_comparison,
    render_curve,
    render_summary,
    roc_points,
    stratified_split,
)
from polarfuse.fusion import classify, classify_category, feature_fuse
from polarfuse.models.external import ExternalModel, load_predictions
from polarfuse.models.lexicon import LexiconModel, PolarityLexicon, default_intensifiers, load_weight_table
from polarfuse.models.patterns import PatternModel, default_patterns, load_patterns
from polarfuse.models.registry import ModelRegistry
from polarfuse.models.tfidf import TfidfLinearModel, train_tfidf_model
from polarfuse.training import (
    FusionSuite,
    build_bundle,
    train_meta_classifier,
    tune_decision_weights,
)

SPLIT_NAMES = ("train", "validation", "test")


# --------------------------------------------------------------------------
# Wiring
# --------------------------------------------------------------------------


def _native_model(cfg: ModelConfig, trained: dict[str, TfidfLinearModel], train_records: Sequence[TextRecord] | None):
    if cfg.kind is ModelKind.LEXICON:
        entries = load_weight_table(cfg.lexicon) if cfg.lexicon else dict(default_lexicon_weights())
        intens = load_weight_table(cfg.intensifiers) if cfg.intensifiers else dict(default_intensifiers())
        return LexiconModel(PolarityLexicon(entries, intens, cfg.negation_window, negation_mode=cfg.negation_mode))
    if cfg.kind is ModelKind.PATTERN:
        return PatternModel(load_patterns(cfg.patterns) if cfg.patterns else default_patterns())
    if cfg.kind is ModelKind.MACHINE_LEARNING:
        if cfg.id in trained:
            return trained[cfg.id]
        if train_records is None:
            raise StateError(f"model {cfg.id!r} has no trained parameters in the artifact")
        model = train_tfidf_model(
            [r.normalized for r in train_records],
            [r.label for r in train_records],
            min_df=cfg.min_df,
            ngram_max=cfg.ngram_max,
            params=cfg.train,
        )
        trained[cfg.id] = model
        return model
    raise ConfigurationError(f"model {cfg.id!r}: kind {cfg.kind.value!r} cannot run in-process")


def load_external_tables(config: ExperimentConfig) -> dict:
    """Parse every prediction file up front so format errors surface before training."""
    return {m.id: load_predictions(m.predictions) for m in config.models if m.external}


def check_coverage(tables: dict, records: Sequence[TextRecord]) -> None:
    """Every external model must have a prediction for every record; report the first gaps."""
    for model_id, table in tables.items():
        missing = [r.id for r in records if r.id not in table]
        if missing:
            shown = ", ".join(repr(x) for x in missing[:5])
            more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
            raise MissingPredictionError(f"model {model_id!r} has no prediction for text_id {shown}{more}")


def build_registry(
    config: ExperimentConfig,
    trained: dict[str, TfidfLinearModel] | None = None,
    train_records: Sequence[TextRecord] | None = None,
    tables: dict | None = None,
) -> ModelRegistry:
    trained = {} if trained is None else trained
    tables = load_external_tables(config) if tables is None else tables
    registry = ModelRegistry()
    for cfg in config.models:
        if cfg.external:
            registry.register(cfg.id, cfg.kind, ExternalModel(cfg.id, cfg.kind, tables[cfg.id]))
        else:
            registry.register(cfg.id, cfg.kind, _native_model(cfg, trained, train_records))
    return registry


def load_splits(config: ExperimentConfig, ratios=None, seed=None) -> tuple[list[TextRecord], ...]:
    if config.dataset is None:
        raise ConfigurationError("config.dataset: required for this command")
    ds = config.dataset
    records = load_dataset(ds.path, ds.format, ds.label_mapping)
    if ds.limit is not None:
        records = records[: ds.limit]
    return stratified_split(records, ratios or config.ratios, config.seed if seed is None else seed)


def _bundle(registry, records, config):
    return build_bundle(registry, [(r.id, r.normalized) for r in records], [r.label for r in records], config.characteristics)


def suite_from_artifact(artifact: TrainedArtifact, kinds) -> FusionSuite:
    return FusionSuite(
        tuple(e["id"] for e in artifact.registry),
        tuple(kinds),
        artifact.delta,
        artifact.weights,
        artifact.meta,
        artifact.rules,
    )


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_train(config: ExperimentConfig, log: TextIO = sys.stdout) -> Path:
    tables = load_external_tables(config)
    train, validation, test = load_splits(config)
    check_coverage(tables, [*train, *validation, *test])
    trained: dict[str, TfidfLinearModel] = {}
    registry = build_registry(config, trained, train, tables)
    val = _bundle(registry, validation, config)

    weights = meta = rules = None
    if "decision_fusion" in config.strategies:
        weights = tune_decision_weights(val, config.delta, config.weight_step)
    if "feature_fusion" in config.strategies:
        meta = train_meta_classifier(val, config.meta)
    if "adaptive_fusion" in config.strategies:
        rules = list(config.adaptive_rules)

    artifact = TrainedArtifact(
        registry=registry.snapshot(),
        delta=config.delta,
        strategies=list(config.strategies),
        split={"ratios": list(config.ratios), "seed": config.seed},
        config_digest=config.digest,
        weights=weights,
        meta=meta,
        rules=rules,
        native_models=trained,
    )
    path = artifacts.save_artifact(artifact, config.output_dir)
    print(f"records: train={len(train)} validation={len(validation)} test={len(test)}", file=log)
    print(f"models: {', '.join(f'{e.model_id}({e.kind.value})' for e in registry.entries)}", file=log)
    if weights is not None:
        print(f"decision weights: {list(weights.weights)}", file=log)
    if meta is not None:
        print(f"meta-classifier: {len(meta.schema)} features, labels {[l.value for l in meta.labels]}", file=log)
    print(f"artifact: {path}", file=log)
    return path


def _curves_wanted(config: ExperimentConfig, gold) -> bool:
    if config.curves == "never":
        return False
    has_pos = SentimentLabel.POSITIVE in gold
    has_other = any(g is not SentimentLabel.POSITIVE for g in gold)
    if not (has_pos and has_other):
        return False
    return config.curves == "always" or SentimentLabel.NEUTRAL not in gold


def cmd_evaluate(config: ExperimentConfig, artifact_path: str | Path | None = None, log: TextIO = sys.stdout) -> Path:
    artifact = artifacts.load_artifact(artifact_path or config.output_dir)
    tables = load_external_tables(config)
    registry = build_registry(config, dict(artifact.native_models), None, tables)
    artifact.check_registry(registry.snapshot())
    _, _, test = load_splits(config, artifact.split["ratios"], artifact.split["seed"])
    bundle = _bundle(registry, test, config)
    suite = suite_from_artifact(artifact, registry.kinds)
    results = compare_strategies(bundle, suite, config.strategies, artifact.delta)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.tsv").write_text(render_comparison(results), encoding="utf-8")
    breakdown = {
        r.name: characteristic_breakdown(bundle.characteristics, r.labels, bundle.gold, config.buckets) for r in results
    }
    (out / "buckets.tsv").write_text(render_buckets(breakdown), encoding="utf-8")

    extra = []
    if _curves_wanted(config, bundle.gold):
        curve_dir = out / "curves"
        curve_dir.mkdir(exist_ok=True)
        for r in results:
            scores = [(s, g is SentimentLabel.POSITIVE) for s, g in zip(r.scores, bundle.gold)]
            roc, pr = roc_points(scores), pr_points(scores)
            (curve_dir / f"roc_{r.name}.tsv").write_text(render_curve(roc, "fpr", "tpr"), encoding="utf-8")
            (curve_dir / f"pr_{r.name}.tsv").write_text(render_curve(pr, "recall", "precision"), encoding="utf-8")
            extra += [(r.name, "roc_auc", auc(roc)), (r.name, "pr_auc", auc(pr))]
    (out / "summary.tsv").write_text(render_summary(results, extra), encoding="utf-8")
    print(render_comparison(results), end="", file=log)
    return out


def cmd_predict(
    config: ExperimentConfig,
    items: Sequence[tuple[str, str]],
    artifact_path: str | Path | None = None,
    strategy: str | None = None,
) -> list[str]:
    """One JSON line per input text, with the per-model breakdown."""
    artifact = artifacts.load_artifact(artifact_path or config.output_dir)
    registry = build_registry(config, dict(artifact.native_models), None)
    artifact.check_registry(registry.snapshot())
    suite = suite_from_artifact(artifact, registry.kinds)
    name = strategy or config.predict_strategy or _default_predict_strategy(artifact.strategies)
    if name in ("best_individual", "majority_vote"):
        raise ConfigurationError(f"strategy {name!r} gives no fused distribution; pick a fusion or averaging strategy")
    if not suite.is_ready(name):
        raise StateError(f"strategy {name!r} has not been trained")
    if not items:
        return []
    bundle = build_bundle(registry, [(i, normalize(t)) for i, t in items], None, config.characteristics)
    lines = []
    for t, (text_id, _) in enumerate(items):
        models = {
            model_id: {"p_pos": d.p_pos, "p_neg": d.p_neg} for model_id, d in zip(registry.ids, bundle.dists[t])
        }
        if name == "feature_fusion":
            vec = FeatureVector(tuple(bundle.features[t].tolist()), bundle.schema)
            dist = feature_fuse(suite.meta, [vec])
            label = classify_category(dist, artifact.delta)
            distribution = {lab.value: p for lab, p in dist.items()}
        else:
            d = suite.fused(name, bundle, t)
            label = classify(d, artifact.delta)
            distribution = {"p_pos": d.p_pos, "p_neg": d.p_neg}
        record = {
            "text_id": text_id,
            "strategy": name,
            "label": label.value,
            "distribution": distribution,
            "models": models,
        }
        lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
    return lines


def _default_predict_strategy(strategies: Sequence[str]) -> str:
    for name in ("feature_fusion", "decision_fusion", "adaptive_fusion", "simple_average"):
        if name in strategies:
            return name
    return "simple_average"


def cmd_characteristics(
    items: Sequence[tuple[str, str]],
    char_config: CharacteristicsConfig = CharacteristicsConfig(),
    buckets: BucketConfig = BucketConfig(),
) -> list[str]:
    lines = []
    for text_id, text in items:
        c = extract_text_characteristics(normalize(text), char_config)
        record = {"text_id": text_id, **c.as_dict(), "buckets": bucket_membership(c, buckets)}
        lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
    return lines


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarfuse", description="Fuse heterogeneous sentiment model outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the split/training seed")
        p.add_argument("--out", default=None, help="output directory (overrides config.output_dir)")

    common(sub.add_parser("train", help="fit the TF-IDF model, decision weights and meta-classifier"))
    p = sub.add_parser("evaluate", help="compare strategies on the test split")
    common(p)
    p.add_argument("--artifact", default=None, help="artifact file or directory (default: output dir)")
    p = sub.add_parser("predict", help="fuse model outputs for new texts")
    common(p)
    p.add_argument("--artifact", default=None)
    p.add_argument("--input", default=None, help="text file, one text (or id<TAB>text) per line; default stdin")
    p.add_argument("--strategy", default=None)
    p = sub.add_parser("characteristics", help="report text characteristics per line")
    common(p, config_required=False)
    p.add_argument("--input", default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "characteristics":
            char_config, buckets = CharacteristicsConfig(), BucketConfig()
            if args.config:
                cfg = load_config(args.config, args.seed, args.out)
                char_config, buckets = cfg.characteristics, cfg.buckets
            for line in cmd_characteristics(read_text_lines(args.input, sys.stdin), char_config, buckets):
                print(line)
            return 0
        config = load_config(args.config, args.seed, args.out)
        if args.command == "train":
            cmd_train(config)
        elif args.command == "evaluate":
            cmd_evaluate(config, args.artifact)
        elif args.command == "predict":
            items = read_text_lines(args.input, sys.stdin)
            for line in cmd_predict(config, items, args.artifact, args.strategy):
                print(line)
        return 0
    except PolarFuseError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 9


if __name__ == "__main__":
    sys.exit(main())
