from pathlib import Path

import pytest

from idiomdetect.corpus import ColumnSchema, Corpus, Label, Sample, SplitKind

FIXTURE_COLUMNS = ("ID", "Language", "MWE", "Previous", "Target", "Next", "Label")

FIXTURE_SCHEMA = ColumnSchema(
    id_column="ID",
    language_column="Language",
    mwe_column="MWE",
    prev_column="Previous",
    target_column="Target",
    next_column="Next",
    label_column="Label",
    label_map={"0": Label.IDIOMATIC, "1": Label.LITERAL},
)

FIXTURE_SCHEMA_RAW = {
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


def make_sample(
    sid: str,
    mwe: str = "kick the bucket",
    label: Label | None = Label.IDIOMATIC,
    language: str = "EN",
    target: str | None = None,
    prev: str = "",
    nxt: str = "",
    split: SplitKind = SplitKind.ONE_SHOT_TRAIN,
) -> Sample:
    return Sample(
        id=sid,
        language=language,
        mwe=mwe,
        prev_ctx=prev,
        target=target if target is not None else f"sentence for {sid}",
        next_ctx=nxt,
        label=label,
        split=split,
    )


def make_corpus(samples, split: SplitKind = SplitKind.ONE_SHOT_TRAIN) -> Corpus:
    import dataclasses

    retagged = tuple(
        s if s.split is split else dataclasses.replace(s, split=split) for s in samples
    )
    return Corpus(samples=retagged, split=split)


def write_tsv(path: Path, rows, columns=FIXTURE_COLUMNS) -> Path:
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def schema() -> ColumnSchema:
    return FIXTURE_SCHEMA
