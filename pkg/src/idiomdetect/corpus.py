"""Corpus parsing, validation, and indexing for the MWE idiomaticity task.

Input files are UTF-8 TSV with one header row. A :class:`ColumnSchema` maps
header names to field roles and declares the raw-label polarity, so the same
loader handles any column layout without code changes.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError, SchemaError


class Label(enum.Enum):
    IDIOMATIC = "Idiomatic"
    LITERAL = "Literal"

    def opposite(self) -> "Label":
        return Label.LITERAL if self is Label.IDIOMATIC else Label.IDIOMATIC

    def __str__(self) -> str:
        return self.value


class SplitKind(enum.Enum):
    ZERO_SHOT_TRAIN = "zero_shot_train"
    ONE_SHOT_TRAIN = "one_shot_train"
    DEV = "dev"
    TEST = "test"

    def __str__(self) -> str:
        return self.value

    @property
    def requires_labels(self) -> bool:
        return self is not SplitKind.TEST


@dataclass(frozen=True)
class Sample:
    """One corpus row: a target sentence with its MWE and surrounding context.

    ``split`` records where the sample was loaded from; together with ``id``
    it forms the sample's global identity (ids are only unique per split).
    """

    id: str
    language: str
    mwe: str
    prev_ctx: str
    target: str
    next_ctx: str
    label: Label | None
    split: SplitKind

    def __post_init__(self) -> None:
        if not self.target.strip():
            raise DataError(f"sample {self.id!r}: target sentence is empty")
        if not self.mwe:
            raise DataError(f"sample {self.id!r}: mwe is empty")


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of samples from one split."""

    samples: tuple[Sample, ...]
    split: SplitKind

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise DataError(f"duplicate sample id {s.id!r} in split {self.split}")
            seen.add(s.id)
            if s.split is not self.split:
                raise DataError(
                    f"sample {s.id!r} is tagged {s.split} but the corpus is {self.split}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def mwes(self) -> set[str]:
        return {s.mwe for s in self.samples}


@dataclass(frozen=True)
class ColumnSchema:
    """Maps TSV header names to sample fields and raw labels to `Label`.

    ``label_column`` may be None for unlabeled corpora (test files without a
    label column). The label map makes polarity explicit; nothing about which
    raw value means Idiomatic is hard-coded.
    """

    id_column: str
    language_column: str
    mwe_column: str
    prev_column: str
    target_column: str
    next_column: str
    label_column: str | None
    label_map: Mapping[str, Label] = field(default_factory=dict)

    def required_columns(self) -> list[str]:
        cols = [
            self.id_column,
            self.language_column,
            self.mwe_column,
            self.prev_column,
            self.target_column,
            self.next_column,
        ]
        if self.label_column is not None:
            cols.append(self.label_column)
        return cols

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "ColumnSchema":
        columns = raw.get("columns")
        if not isinstance(columns, Mapping):
            raise SchemaError("schema must contain a 'columns' mapping")
        missing = [k for k in ("id", "language", "mwe", "prev", "target", "next") if k not in columns]
        if missing:
            raise SchemaError(f"schema columns missing roles: {', '.join(missing)}")
        label_map = {}
        for raw_value, name in (raw.get("label_map") or {}).items():
            try:
                label_map[str(raw_value)] = Label(name)
            except ValueError:
                raise SchemaError(
                    f"label_map value {name!r} is not one of "
                    f"{[l.value for l in Label]}"
                ) from None
        return cls(
            id_column=columns["id"],
            language_column=columns["language"],
            mwe_column=columns["mwe"],
            prev_column=columns["prev"],
            target_column=columns["target"],
            next_column=columns["next"],
            label_column=columns.get("label"),
            label_map=label_map,
        )


@dataclass(frozen=True)
class SplitStats:
    sample_count: int
    mwe_count: int
    per_language: dict[str, int]
    per_label: dict[str, int]

    def to_json(self) -> str:
        payload = {
            "sample_count": self.sample_count,
            "mwe_count": self.mwe_count,
            "per_language": dict(sorted(self.per_language.items())),
            "per_label": dict(sorted(self.per_label.items())),
        }
        return json.dumps(payload, sort_keys=False)


@dataclass(frozen=True)
class DisjointnessResult:
    passed: bool
    overlap: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "overlap": list(self.overlap)})


SupportIndex = dict[str, list[Sample]]


def load_corpus(path: str | Path, schema: ColumnSchema, split: SplitKind) -> Corpus:
    """Parse a TSV corpus file into a :class:`Corpus`.

    All text fields are trimmed of leading/trailing whitespace; nothing else
    is normalized. Row order is preserved.

    Raises:
        SchemaError: a schema-named column is absent from the header.
        DataError: unmappable label, missing required label, duplicate id,
            or a row with the wrong number of fields.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"corpus file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a header row")

    header = lines[0].split("\t")
    positions: dict[str, int] = {}
    for col in schema.required_columns():
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r} (header: {header})")
        positions[col] = header.index(col)

    samples: list[Sample] = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DataError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(fields)}"
            )

        def get(col: str) -> str:
            return fields[positions[col]].strip()

        label: Label | None = None
        if schema.label_column is not None:
            raw_label = get(schema.label_column)
            if raw_label:
                if raw_label not in schema.label_map:
                    raise DataError(
                        f"{path}:{lineno}: label {raw_label!r} not in label map"
                    )
                label = schema.label_map[raw_label]
        if label is None and split.requires_labels:
            raise DataError(f"{path}:{lineno}: missing label in split {split}")

        try:
            sample = Sample(
                id=get(schema.id_column),
                language=get(schema.language_column),
                mwe=get(schema.mwe_column),
                prev_ctx=get(schema.prev_column),
                target=get(schema.target_column),
                next_ctx=get(schema.next_column),
                label=label,
                split=split,
            )
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        samples.append(sample)

    return Corpus(samples=tuple(samples), split=split)


def write_corpus(corpus: Corpus, path: str | Path, schema: ColumnSchema) -> None:
    """Serialize a corpus back to TSV in the schema's column layout.

    Labels are written through the inverse of the schema label map (first raw
    value wins when the map is not injective). Loading the written file with
    the same schema reproduces the corpus exactly.
    """
    inverse: dict[Label, str] = {}
    for raw, label in schema.label_map.items():
        inverse.setdefault(label, raw)

    columns = schema.required_columns()
    rows = ["\t".join(columns)]
    for s in corpus:
        values = {
            schema.id_column: s.id,
            schema.language_column: s.language,
            schema.mwe_column: s.mwe,
            schema.prev_column: s.prev_ctx,
            schema.target_column: s.target,
            schema.next_column: s.next_ctx,
        }
        if schema.label_column is not None:
            if s.label is None:
                values[schema.label_column] = ""
            else:
                if s.label not in inverse:
                    raise DataError(
                        f"sample {s.id!r}: label {s.label} has no raw value in the label map"
                    )
                values[schema.label_column] = inverse[s.label]
        for col, value in values.items():
            if "\t" in value or "\n" in value:
                raise DataError(
                    f"sample {s.id!r}: field for column {col!r} contains a tab or newline"
                )
        rows.append("\t".join(values[c] for c in columns))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def split_stats(corpus: Corpus) -> SplitStats:
    """Count samples, distinct MWEs, and per-language/per-label totals."""
    per_language: dict[str, int] = {}
    per_label: dict[str, int] = {}
    mwes: set[str] = set()
    for s in corpus:
        per_language[s.language] = per_language.get(s.language, 0) + 1
        if s.label is not None:
            per_label[s.label.value] = per_label.get(s.label.value, 0) + 1
        mwes.add(s.mwe)
    return SplitStats(
        sample_count=len(corpus),
        mwe_count=len(mwes),
        per_language=per_language,
        per_label=per_label,
    )


def validate_zero_shot_disjoint(train: Corpus, eval_corpus: Corpus) -> DisjointnessResult:
    """Check that train and eval MWE sets are disjoint.

    A failed check is a result, not an exception; the overlap is listed in
    sorted order.
    """
    overlap = sorted(train.mwes() & eval_corpus.mwes())
    return DisjointnessResult(passed=not overlap, overlap=tuple(overlap))


def build_support_index(oneshot: Corpus) -> SupportIndex:
    """Index one-shot train samples by MWE, preserving per-MWE input order.

    Raises:
        DataError: any sample is unlabeled.
    """
    index: SupportIndex = {}
    for s in oneshot:
        if s.label is None:
            raise DataError(f"sample {s.id!r} is unlabeled; support samples need labels")
        index.setdefault(s.mwe, []).append(s)
    return index


def labeled_samples(corpus: Corpus) -> Iterable[tuple[Sample, Label]]:
    """Yield (sample, label) pairs, failing fast on unlabeled samples."""
    for s in corpus:
        if s.label is None:
            raise DataError(f"sample {s.id!r} is unlabeled")
        yield s, s.label
