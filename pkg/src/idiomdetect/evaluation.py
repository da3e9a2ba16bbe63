"""Macro-F1 scoring and per-language evaluation reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Corpus, Label
from .errors import DataError
from .fewshot import ScoredPrediction


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class LanguageScores:
    macro_f1: float
    sample_count: int


@dataclass(frozen=True)
class EvalReport:
    overall_macro_f1: float
    sample_count: int
    per_language: dict[str, LanguageScores]
    per_class: dict[str, ClassScores]
    model: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "overall_macro_f1": self.overall_macro_f1,
            "sample_count": self.sample_count,
            "per_language": {
                lang: {"macro_f1": s.macro_f1, "sample_count": s.sample_count}
                for lang, s in sorted(self.per_language.items())
            },
            "per_class": {
                name: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for name, s in self.per_class.items()
            },
            "model": self.model,
        }
        return json.dumps(payload, indent=2, sort_keys=False)


def _class_counts(
    preds: Sequence[Label], golds: Sequence[Label], cls: Label
) -> tuple[int, int, int, int]:
    tp = sum(1 for p, g in zip(preds, golds) if p is cls and g is cls)
    fp = sum(1 for p, g in zip(preds, golds) if p is cls and g is not cls)
    fn = sum(1 for p, g in zip(preds, golds) if p is not cls and g is cls)
    support = sum(1 for g in golds if g is cls)
    return tp, fp, fn, support


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
    return precision, recall, f1


def macro_f1(preds: Sequence[Label], golds: Sequence[Label]) -> float:
    """Unweighted mean of the two per-class F1 scores.

    Per-class F1 is 2*tp / (2*tp + fp + fn), which is 0 when the class never
    appears in either list and 0 when precision + recall is 0; the macro
    average always runs over both classes.

    Raises:
        DataError: empty input or mismatched lengths.
    """
    if len(preds) != len(golds):
        raise DataError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if len(preds) == 0:
        raise DataError("cannot score an empty prediction list")
    total = 0.0
    for cls in (Label.IDIOMATIC, Label.LITERAL):
        tp, fp, fn, _ = _class_counts(preds, golds, cls)
        total += _prf(tp, fp, fn)[2]
    return total / 2.0


def build_report(
    predictions: Sequence[ScoredPrediction],
    gold: Corpus,
    group_by_language: bool = True,
    model: Mapping | None = None,
) -> EvalReport:
    """Score predictions against a gold corpus, joined on sample id.

    Raises:
        DataError: a prediction id is absent from the gold corpus, or a
            matched gold sample has no label.
    """
    by_id = {s.id: s for s in gold}
    pred_labels: list[Label] = []
    gold_labels: list[Label] = []
    languages: list[str] = []
    for p in predictions:
        sample = by_id.get(p.sample_id)
        if sample is None:
            raise DataError(f"prediction id {p.sample_id!r} not present in the gold corpus")
        if sample.label is None:
            raise DataError(f"gold sample {sample.id!r} has no label")
        pred_labels.append(p.label)
        gold_labels.append(sample.label)
        languages.append(sample.language)

    per_language: dict[str, LanguageScores] = {}
    if group_by_language:
        for lang in sorted(set(languages)):
            idx = [i for i, l in enumerate(languages) if l == lang]
            per_language[lang] = LanguageScores(
                macro_f1=macro_f1([pred_labels[i] for i in idx], [gold_labels[i] for i in idx]),
                sample_count=len(idx),
            )

    per_class: dict[str, ClassScores] = {}
    for cls in (Label.IDIOMATIC, Label.LITERAL):
        tp, fp, fn, support = _class_counts(pred_labels, gold_labels, cls)
        precision, recall, f1 = _prf(tp, fp, fn)
        per_class[cls.value] = ClassScores(
            precision=precision, recall=recall, f1=f1, support=support
        )

    return EvalReport(
        overall_macro_f1=macro_f1(pred_labels, gold_labels),
        sample_count=len(predictions),
        per_language=per_language,
        per_class=per_class,
        model=dict(model or {}),
    )


def render_report(report: EvalReport) -> str:
    """Aligned text table: one row per language plus an ALL row, mirroring
    the per-language layout of published idiomaticity results."""
    setting = str(report.model.get("setting", "-"))
    rows = [("setting", "language", "samples", "macro_f1")]
    for lang, scores in sorted(report.per_language.items()):
        rows.append((setting, lang, str(scores.sample_count), f"{scores.macro_f1:.4f}"))
    rows.append((setting, "ALL", str(report.sample_count), f"{report.overall_macro_f1:.4f}"))

    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = []
    for r in rows:
        lines.append(
            "  ".join(
                r[c].ljust(widths[c]) if c < 2 else r[c].rjust(widths[c])
                for c in range(4)
            ).rstrip()
        )
    return "\n".join(lines) + "\n"
