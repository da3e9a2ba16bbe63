"""Declarative run configuration for the command-line interface.

A run is driven by one YAML document; command-line flags override single
values. Before any work starts the document is checked and every default is
materialized, and commands that write outputs also write the resolved
snapshot so the run can be reproduced bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .corpus import ColumnSchema, SplitKind
from .embedding import CONTEXT_MODES
from .errors import ConfigError, SchemaError

MODES = ("zero-shot", "one-shot", "ensemble")
PROVIDER_KINDS = ("hashed", "table")
HEADS = ("siamese", "relation")

DEFAULT_SCHEMA = {
    "columns": {
        "id": "ID",
        "language": "Language",
        "mwe": "MWE",
        "prev": "Previous",
        "target": "Target",
        "next": "Next",
        "label": "Label",
    },
    "label_map": {"0": "Idiomatic", "1": "Literal"},
}


@dataclass
class ProviderConfig:
    kind: str = "hashed"
    dim: int = 256
    ngram_sizes: tuple[int, ...] = (3, 4)
    hash_seed: int = 0
    normalize: bool = True
    context: str = "target-only"
    path: str | None = None  # table provider only

    def validate(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"provider.kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.kind == "table" and not self.path:
            raise ConfigError("provider.kind 'table' requires provider.path")
        if self.kind == "hashed":
            if self.dim < 1:
                raise ConfigError(f"provider.dim must be >= 1, got {self.dim}")
            if not self.ngram_sizes or any(n < 1 for n in self.ngram_sizes):
                raise ConfigError(f"provider.ngram_sizes must be non-empty, sizes >= 1: {self.ngram_sizes}")
        if self.context not in CONTEXT_MODES:
            raise ConfigError(f"provider.context must be one of {CONTEXT_MODES}, got {self.context!r}")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "context": self.context}
        if self.kind == "hashed":
            out.update(
                dim=self.dim,
                ngram_sizes=list(self.ngram_sizes),
                hash_seed=self.hash_seed,
                normalize=self.normalize,
            )
        else:
            out["path"] = self.path
        return out

    @classmethod
    def from_mapping(cls, raw: Mapping | None) -> "ProviderConfig":
        raw = raw or {}
        cfg = cls(
            kind=str(raw.get("kind", "hashed")),
            dim=int(raw.get("dim", 256)),
            ngram_sizes=tuple(int(n) for n in raw.get("ngram_sizes", (3, 4))),
            hash_seed=int(raw.get("hash_seed", 0)),
            normalize=bool(raw.get("normalize", True)),
            context=str(raw.get("context", "target-only")),
            path=raw.get("path"),
        )
        cfg.validate()
        return cfg


@dataclass
class HyperConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 2e-5
    dropout: float = 0.5
    weight_decay: float = 0.01
    hidden_widths: tuple[int, ...] = (128,)

    def validate(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"hyper.epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"hyper.batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"hyper.dropout must be in [0, 1), got {self.dropout}")
        if self.learning_rate <= 0:
            raise ConfigError(f"hyper.learning_rate must be > 0, got {self.learning_rate}")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hyper.hidden_widths must be positive, got {self.hidden_widths}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "dropout": self.dropout,
            "weight_decay": self.weight_decay,
            "hidden_widths": list(self.hidden_widths),
        }

    @classmethod
    def from_mapping(cls, raw: Mapping | None) -> "HyperConfig":
        raw = raw or {}
        cfg = cls(
            epochs=int(raw.get("epochs", 100)),
            batch_size=int(raw.get("batch_size", 32)),
            learning_rate=float(raw.get("learning_rate", 2e-5)),
            dropout=float(raw.get("dropout", 0.5)),
            weight_decay=float(raw.get("weight_decay", 0.01)),
            hidden_widths=tuple(int(w) for w in raw.get("hidden_widths", (128,))),
        )
        cfg.validate()
        return cfg


@dataclass
class RunConfig:
    mode: str = "one-shot"
    seed: int = 0
    head: str = "relation"
    threshold: float = 0.5
    eval_split: str = "dev"
    corpora: dict[str, str] = field(default_factory=dict)
    schema_raw: dict = field(default_factory=lambda: dict(DEFAULT_SCHEMA))
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    hyper: HyperConfig = field(default_factory=HyperConfig)
    ensemble_members: list[dict] = field(default_factory=list)
    ensemble_model_files: list[str] = field(default_factory=list)
    output_dir: str | None = None
    model_file: str | None = None
    predictions_file: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")
        valid_splits = [k.value for k in SplitKind]
        if self.eval_split not in valid_splits:
            raise ConfigError(f"eval_split must be one of {valid_splits}, got {self.eval_split!r}")
        for name in self.corpora:
            if name not in valid_splits:
                raise ConfigError(f"corpora key {name!r} is not one of {valid_splits}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")

    @property
    def schema(self) -> ColumnSchema:
        try:
            return ColumnSchema.from_mapping(self.schema_raw)
        except SchemaError as exc:
            raise ConfigError(f"invalid schema: {exc}") from None

    def corpus_path(self, split: SplitKind) -> Path:
        path = self.corpora.get(split.value)
        if not path:
            raise ConfigError(f"config missing corpus path corpora.{split.value}")
        resolved = Path(path)
        if not resolved.is_file():
            raise ConfigError(f"corpus file not found: {resolved}")
        return resolved

    def resolved(self, command: str) -> dict:
        """Every value materialized, for the reproducibility snapshot."""
        return {
            "command": command,
            "mode": self.mode,
            "seed": self.seed,
            "head": self.head,
            "threshold": self.threshold,
            "eval_split": self.eval_split,
            "corpora": dict(sorted(self.corpora.items())),
            "schema": self.schema_raw,
            "provider": self.provider.to_dict(),
            "hyper": self.hyper.to_dict(),
            "ensemble": {
                "members": self.ensemble_members,
                "model_files": self.ensemble_model_files,
            },
            "output_dir": self.output_dir,
            "model_file": self.model_file,
            "predictions_file": self.predictions_file,
        }

    def snapshot_yaml(self, command: str) -> str:
        return yaml.safe_dump(self.resolved(command), sort_keys=True, default_flow_style=False)

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "RunConfig":
        if not isinstance(raw, Mapping):
            raise ConfigError("config document must be a mapping")
        known = {
            "mode", "seed", "head", "threshold", "eval_split", "corpora",
            "schema", "provider", "hyper", "ensemble", "output_dir",
            "model_file", "predictions_file",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        ensemble = raw.get("ensemble") or {}
        schema_raw = raw.get("schema") or dict(DEFAULT_SCHEMA)
        cfg = cls(
            mode=str(raw.get("mode", "one-shot")),
            seed=int(raw.get("seed", 0)),
            head=str(raw.get("head", "relation")),
            threshold=float(raw.get("threshold", 0.5)),
            eval_split=str(raw.get("eval_split", "dev")),
            corpora={str(k): str(v) for k, v in (raw.get("corpora") or {}).items()},
            schema_raw=schema_raw,
            provider=ProviderConfig.from_mapping(raw.get("provider")),
            hyper=HyperConfig.from_mapping(raw.get("hyper")),
            ensemble_members=list(ensemble.get("members") or []),
            ensemble_model_files=[str(p) for p in (ensemble.get("model_files") or [])],
            output_dir=raw.get("output_dir"),
            model_file=raw.get("model_file"),
            predictions_file=raw.get("predictions_file"),
        )
        cfg.schema  # validate eagerly
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid yaml: {exc}") from None
        if raw is None:
            raw = {}
        return cls.from_mapping(raw)
