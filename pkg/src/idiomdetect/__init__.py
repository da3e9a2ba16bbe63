"""Idiomaticity detection for multiword expressions.

Zero-shot: a classifier head over sentence embeddings, trained on MWEs
disjoint from evaluation. One-shot: Siamese/Relation pair-scoring heads with
a max-of-similarity/dissimilarity decision over the query's support set.
"""

from .corpus import (
    ColumnSchema,
    Corpus,
    Label,
    Sample,
    SplitKind,
    SplitStats,
    build_support_index,
    load_corpus,
    split_stats,
    validate_zero_shot_disjoint,
    write_corpus,
)
from .embedding import (
    EmbeddingTable,
    HashedNgramEncoder,
    TableProvider,
    load_table,
    write_table,
)
from .evaluation import EvalReport, build_report, macro_f1, render_report
from .fewshot import (
    HeadKind,
    PairExample,
    RelationHead,
    ScoredPrediction,
    SiameseHead,
    build_pairs,
    evaluate_oneshot,
    make_head,
    predict_oneshot,
    read_predictions,
    train_head,
    write_predictions,
)
from .zeroshot import (
    ZeroShotClassifier,
    ensemble_predictions,
    majority_vote,
    predict_zeroshot,
    train_classifier,
)

__all__ = [
    "ColumnSchema",
    "Corpus",
    "Label",
    "Sample",
    "SplitKind",
    "SplitStats",
    "build_support_index",
    "load_corpus",
    "split_stats",
    "validate_zero_shot_disjoint",
    "write_corpus",
    "EmbeddingTable",
    "HashedNgramEncoder",
    "TableProvider",
    "load_table",
    "write_table",
    "EvalReport",
    "build_report",
    "macro_f1",
    "render_report",
    "HeadKind",
    "PairExample",
    "RelationHead",
    "ScoredPrediction",
    "SiameseHead",
    "build_pairs",
    "evaluate_oneshot",
    "make_head",
    "predict_oneshot",
    "read_predictions",
    "train_head",
    "write_predictions",
    "ZeroShotClassifier",
    "ensemble_predictions",
    "majority_vote",
    "predict_zeroshot",
    "train_classifier",
]

__version__ = "0.1.0"
