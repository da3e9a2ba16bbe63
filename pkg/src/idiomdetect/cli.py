"""Command-line entry point: reproducible runs driven by a YAML config.

Exit codes: 0 success, 2 configuration or data error, 3 inference contract
error, 4 numeric failure. Commands that produce files write them atomically
(temp file + rename) along with a resolved-config snapshot that pins every
default, so re-running the snapshot reproduces the outputs bit for bit.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import nn
from .config import HyperConfig, ProviderConfig, RunConfig
from .corpus import (
    Corpus,
    SplitKind,
    build_support_index,
    load_corpus,
    split_stats,
    validate_zero_shot_disjoint,
)
from .embedding import HashedNgramEncoder, TableProvider, load_table
from .errors import ConfigError, IdiomDetectError
from .evaluation import build_report, render_report
from .fewshot import (
    build_pairs,
    evaluate_oneshot,
    make_head,
    train_head,
    write_predictions,
)
from .zeroshot import (
    ZeroShotClassifier,
    ensemble_predictions,
    predict_corpus_zeroshot,
    train_classifier,
)

SPLIT_CHOICES = [k.value for k in SplitKind]


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class OutputSet:
    """Tracks files written by one command; removes them all if it fails."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def __enter__(self) -> "OutputSet":
        return self

    def track(self, path: Path) -> Path:
        self.paths.append(path)
        return path

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            for path in self.paths:
                path.unlink(missing_ok=True)


def run_guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except IdiomDetectError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def load_run_config(
    config_path: str,
    **overrides,
) -> RunConfig:
    """Load the YAML document and fold non-None flag overrides into it."""
    path = Path(config_path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    import yaml

    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config document must be a mapping")
    hyper_keys = {"epochs", "batch_size", "learning_rate", "dropout"}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in hyper_keys:
            raw.setdefault("hyper", {})[key] = value
        else:
            raw[key] = value
    return RunConfig.from_mapping(raw)


def build_provider(pcfg: ProviderConfig):
    if pcfg.kind == "hashed":
        return HashedNgramEncoder(
            dim=pcfg.dim,
            ngram_sizes=pcfg.ngram_sizes,
            seed=pcfg.hash_seed,
            normalize=pcfg.normalize,
            context=pcfg.context,
        )
    table_path = Path(pcfg.path)
    if not table_path.is_file():
        raise ConfigError(f"embedding table not found: {table_path}")
    return TableProvider(load_table(table_path))


def load_corpus_for(cfg: RunConfig, split: SplitKind) -> Corpus:
    return load_corpus(cfg.corpus_path(split), cfg.schema, split)


def require_output_dir(cfg: RunConfig) -> Path:
    if not cfg.output_dir:
        raise ConfigError("output_dir is required (set it in the config or pass --output-dir)")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _train_one(cfg: RunConfig) -> tuple[nn.Mlp, dict, list[dict]]:
    """Train the head/classifier the config selects; returns (model, header, log)."""
    provider = build_provider(cfg.provider)
    hyper = cfg.hyper
    if cfg.mode == "zero-shot":
        corpus = load_corpus_for(cfg, SplitKind.ZERO_SHOT_TRAIN)
        clf = train_classifier(
            corpus,
            provider,
            hidden_widths=hyper.hidden_widths,
            dropout=hyper.dropout,
            epochs=hyper.epochs,
            batch_size=hyper.batch_size,
            learning_rate=hyper.learning_rate,
            weight_decay=hyper.weight_decay,
            seed=cfg.seed,
            threshold=cfg.threshold,
        )
        model, history = clf.model_, clf.history_
        kind = "classifier"
    elif cfg.mode == "one-shot":
        corpus = load_corpus_for(cfg, SplitKind.ONE_SHOT_TRAIN)
        pairs = build_pairs(corpus)
        head = train_head(
            cfg.head,
            pairs,
            provider,
            epochs=hyper.epochs,
            batch_size=hyper.batch_size,
            learning_rate=hyper.learning_rate,
            weight_decay=hyper.weight_decay,
            dropout=hyper.dropout,
            seed=cfg.seed,
        )
        model, history = head.model_, head.history_
        kind = cfg.head
    else:
        raise ConfigError("the train command handles modes zero-shot and one-shot; use the ensemble command")
    header = {
        "kind": kind,
        "seed": cfg.seed,
        "threshold": cfg.threshold,
        "provider": cfg.provider.to_dict(),
        "hyper": hyper.to_dict(),
    }
    return model, header, history


def _write_model_outputs(
    out: Path, cfg: RunConfig, model: nn.Mlp, header: dict, history: list[dict], command: str
) -> Path:
    with OutputSet() as outputs:
        model_path = outputs.track(out / "model.txt")
        tmp = model_path.with_name(model_path.name + f".tmp{os.getpid()}")
        nn.save_model(model, header, tmp)
        os.replace(tmp, model_path)
        log_lines = "".join(json.dumps(row, sort_keys=True) + "\n" for row in history)
        atomic_write_text(outputs.track(out / "train_log.jsonl"), log_lines)
        atomic_write_text(
            outputs.track(out / "resolved_config.yaml"), cfg.snapshot_yaml(command)
        )
    return model_path


def _predict_with_model(cfg: RunConfig, model_file: Path, queries: Corpus):
    mlp, header = nn.load_model(model_file)
    provider = build_provider(ProviderConfig.from_mapping(header.get("provider")))
    kind = header.get("kind")
    if kind == "classifier":
        clf = ZeroShotClassifier(threshold=float(header.get("threshold", cfg.threshold)))
        clf.set_model(mlp)
        return predict_corpus_zeroshot(queries, clf, provider)
    if kind in ("siamese", "relation"):
        head = make_head(kind).set_model(mlp)
        support = load_corpus_for(cfg, SplitKind.ONE_SHOT_TRAIN)
        index = build_support_index(support)
        return evaluate_oneshot(queries, index, head, provider)
    raise ConfigError(f"{model_file}: unknown model kind {kind!r}")


@click.group()
def main() -> None:
    """Idiomaticity detection over multiword expressions."""


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--split", "split", required=True, type=click.Choice(SPLIT_CHOICES))
@click.option("--out", "out_dir", default=None, type=click.Path())
@run_guard
def stats(config_path: str, split: str, out_dir: str | None) -> None:
    """Print sample/MWE/language/label counts for one corpus split."""
    cfg = load_run_config(config_path, output_dir=out_dir)
    corpus = load_corpus_for(cfg, SplitKind(split))
    payload = split_stats(corpus).to_json()
    click.echo(payload)
    if out_dir:
        out = require_output_dir(cfg)
        with OutputSet() as outputs:
            atomic_write_text(outputs.track(out / "stats.json"), payload + "\n")
            atomic_write_text(
                outputs.track(out / "resolved_config.yaml"), cfg.snapshot_yaml("stats")
            )


@main.command("validate-splits")
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", default=None, type=click.Path())
@run_guard
def validate_splits(config_path: str, out_dir: str | None) -> None:
    """Check zero-shot MWE disjointness between train and eval splits."""
    cfg = load_run_config(config_path, output_dir=out_dir)
    train = load_corpus_for(cfg, SplitKind.ZERO_SHOT_TRAIN)
    results = {}
    for split in (SplitKind.DEV, SplitKind.TEST):
        if cfg.corpora.get(split.value):
            eval_corpus = load_corpus_for(cfg, split)
            check = validate_zero_shot_disjoint(train, eval_corpus)
            results[f"zero_shot_train_vs_{split.value}"] = {
                "passed": check.passed,
                "overlap": list(check.overlap),
            }
    if not results:
        raise ConfigError("no dev or test corpus configured to validate against")
    payload = json.dumps(results, sort_keys=True)
    click.echo(payload)
    if out_dir:
        out = require_output_dir(cfg)
        with OutputSet() as outputs:
            atomic_write_text(outputs.track(out / "validation.json"), payload + "\n")
            atomic_write_text(
                outputs.track(out / "resolved_config.yaml"),
                cfg.snapshot_yaml("validate-splits"),
            )


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--mode", default=None, type=click.Choice(["zero-shot", "one-shot"]))
@click.option("--head", default=None, type=click.Choice(["siamese", "relation"]))
@click.option("--seed", default=None, type=int)
@click.option("--epochs", default=None, type=int)
@run_guard
def train(config_path, output_dir, mode, head, seed, epochs) -> None:
    """Train the configured head or classifier and write the model file."""
    cfg = load_run_config(
        config_path, output_dir=output_dir, mode=mode, head=head, seed=seed, epochs=epochs
    )
    out = require_output_dir(cfg)
    model, header, history = _train_one(cfg)
    model_path = _write_model_outputs(out, cfg, model, header, history, "train")
    click.echo(f"wrote {model_path}")


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--model", "model_file", default=None, type=click.Path())
@click.option("--split", "eval_split", default=None, type=click.Choice(SPLIT_CHOICES))
@click.option("--mode", default=None, type=click.Choice(list(("zero-shot", "one-shot", "ensemble"))))
@run_guard
def predict(config_path, output_dir, model_file, eval_split, mode) -> None:
    """Write a prediction TSV for the configured query split."""
    cfg = load_run_config(
        config_path,
        output_dir=output_dir,
        model_file=model_file,
        eval_split=eval_split,
        mode=mode,
    )
    out = require_output_dir(cfg)
    queries = load_corpus_for(cfg, SplitKind(cfg.eval_split))

    with OutputSet() as outputs:
        if cfg.mode == "ensemble":
            files = [Path(p) for p in cfg.ensemble_model_files]
            if len(files) < 3 or len(files) % 2 == 0:
                raise ConfigError(
                    f"ensemble.model_files must list an odd number >= 3 of models, got {len(files)}"
                )
            for f in files:
                if not f.is_file():
                    raise ConfigError(f"member model file not found: {f}")
            member_preds = [_predict_with_model(cfg, f, queries) for f in files]
            predictions = ensemble_predictions(member_preds)
            votes_path = outputs.track(out / "votes.tsv")
            header = "id\t" + "\t".join(f"member_{i}" for i in range(len(files)))
            rows = [header]
            for per_member in zip(*member_preds):
                rows.append(
                    per_member[0].sample_id
                    + "\t"
                    + "\t".join(p.label.value for p in per_member)
                )
            atomic_write_text(votes_path, "\n".join(rows) + "\n")
        else:
            if not cfg.model_file:
                raise ConfigError("model_file is required (set it in the config or pass --model)")
            predictions = _predict_with_model(cfg, Path(cfg.model_file), queries)

        pred_path = outputs.track(out / "predictions.tsv")
        tmp = pred_path.with_name(pred_path.name + f".tmp{os.getpid()}")
        write_predictions(predictions, tmp)
        os.replace(tmp, pred_path)
        atomic_write_text(
            outputs.track(out / "resolved_config.yaml"), cfg.snapshot_yaml("predict")
        )
    click.echo(f"wrote {pred_path}")


@main.command("eval")
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--predictions", "predictions_file", default=None, type=click.Path())
@click.option("--split", "eval_split", default=None, type=click.Choice(SPLIT_CHOICES))
@run_guard
def eval_cmd(config_path, output_dir, predictions_file, eval_split) -> None:
    """Score a prediction TSV against gold labels; write report files."""
    from .fewshot import read_predictions

    cfg = load_run_config(
        config_path,
        output_dir=output_dir,
        predictions_file=predictions_file,
        eval_split=eval_split,
    )
    out = require_output_dir(cfg)
    if not cfg.predictions_file:
        raise ConfigError("predictions_file is required (set it in the config or pass --predictions)")
    predictions = read_predictions(cfg.predictions_file)
    gold = load_corpus_for(cfg, SplitKind(cfg.eval_split))
    report = build_report(
        predictions,
        gold,
        model={"setting": cfg.mode, "predictions": str(cfg.predictions_file)},
    )
    text = render_report(report)
    click.echo(text, nl=False)
    with OutputSet() as outputs:
        atomic_write_text(outputs.track(out / "report.json"), report.to_json() + "\n")
        atomic_write_text(outputs.track(out / "report.txt"), text)
        atomic_write_text(
            outputs.track(out / "resolved_config.yaml"), cfg.snapshot_yaml("eval")
        )


@main.command()
@click.option("-c", "--config", "config_path", required=True, type=click.Path())
@click.option("--output-dir", default=None, type=click.Path())
@run_guard
def ensemble(config_path, output_dir) -> None:
    """Train the configured member classifiers, vote, and write predictions."""
    cfg = load_run_config(config_path, output_dir=output_dir, mode="zero-shot")
    out = require_output_dir(cfg)
    members = cfg.ensemble_members
    if len(members) < 3 or len(members) % 2 == 0:
        raise ConfigError(
            f"ensemble.members must list an odd number >= 3 of member specs, got {len(members)}"
        )

    queries = load_corpus_for(cfg, SplitKind(cfg.eval_split))
    with OutputSet() as outputs:
        member_preds = []
        member_meta = []
        for i, spec in enumerate(members):
            if not isinstance(spec, dict):
                raise ConfigError(f"ensemble.members[{i}] must be a mapping of overrides")
            member_cfg = RunConfig.from_mapping(
                {
                    **{k: v for k, v in cfg.resolved("ensemble").items() if k not in ("command", "ensemble")},
                    "mode": "zero-shot",
                    **spec,
                }
            )
            member_dir = out / "members" / str(i)
            member_dir.mkdir(parents=True, exist_ok=True)
            model, header, history = _train_one(member_cfg)
            model_path = outputs.track(member_dir / "model.txt")
            tmp = model_path.with_name(model_path.name + f".tmp{os.getpid()}")
            nn.save_model(model, header, tmp)
            os.replace(tmp, model_path)
            atomic_write_text(
                outputs.track(member_dir / "train_log.jsonl"),
                "".join(json.dumps(row, sort_keys=True) + "\n" for row in history),
            )
            member_preds.append(_predict_with_model(member_cfg, model_path, queries))
            member_meta.append({"seed": member_cfg.seed, "provider": member_cfg.provider.to_dict()})

        predictions = ensemble_predictions(member_preds)
        votes_path = outputs.track(out / "votes.tsv")
        header_line = "id\t" + "\t".join(f"member_{i}" for i in range(len(members)))
        rows = [header_line]
        for per_member in zip(*member_preds):
            rows.append(
                per_member[0].sample_id + "\t" + "\t".join(p.label.value for p in per_member)
            )
        atomic_write_text(votes_path, "\n".join(rows) + "\n")

        pred_path = outputs.track(out / "predictions.tsv")
        tmp = pred_path.with_name(pred_path.name + f".tmp{os.getpid()}")
        write_predictions(predictions, tmp)
        os.replace(tmp, pred_path)
        atomic_write_text(
            outputs.track(out / "members.json"),
            json.dumps(member_meta, sort_keys=True, indent=2) + "\n",
        )
        atomic_write_text(
            outputs.track(out / "resolved_config.yaml"), cfg.snapshot_yaml("ensemble")
        )
    click.echo(f"wrote {pred_path}")


if __name__ == "__main__":
    main()
