"""Zero-shot baseline: a sigmoid classifier head over sentence embeddings.

Zero-shot means the training MWEs are disjoint from the evaluation MWEs, so
the head can only exploit properties of the sentence representation itself.
Several independently trained classifiers can be combined by hard-label
majority vote.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Corpus, Label, Sample
from .embedding import EmbeddingProvider, embed_corpus
from .errors import ConfigError, DataError, NumericError
from . import nn
from .fewshot import ScoredPrediction
from .validation import as_matrix, as_binary_targets


class ZeroShotClassifier(BaseEstimator):
    """Dense ReLU network with a single sigmoid output unit.

    Trains with binary cross entropy on (embedding, label) rows, mapping
    Idiomatic to target 1. ``predict`` applies the decision threshold with
    the >= convention; learned state lives in ``model_`` / ``history_``.
    """

    def __init__(
        self,
        hidden_widths: tuple[int, ...] = (128,),
        dropout: float = 0.5,
        epochs: int = 100,
        batch_size: int = 32,
        learning_rate: float = 2e-5,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        seed: int = 0,
        threshold: float = 0.5,
    ):
        self.hidden_widths = hidden_widths
        self.dropout = dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.seed = seed
        self.threshold = threshold

    def fit(self, X, y) -> "ZeroShotClassifier":
        X = as_matrix(X, "X")
        targets = as_binary_targets(y, "y", length=X.shape[0])
        if X.shape[0] == 0:
            raise DataError("cannot train a classifier on an empty corpus")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hidden widths must be positive, got {self.hidden_widths}")

        rng = nn.make_rng(self.seed)
        dims = [X.shape[1], *self.hidden_widths, 1]
        activations = ["relu"] * len(self.hidden_widths) + ["sigmoid"]
        dropout = [self.dropout] * len(self.hidden_widths) + [0.0]
        model = nn.init_mlp(dims, activations, dropout, rng)
        params = model.params()
        names = model.param_names()
        state = nn.AdamWState.for_params(params)
        opt = nn.AdamWConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            weight_decay=self.weight_decay,
        )

        n = X.shape[0]
        same = targets > 0.5
        history: list[dict] = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            loss_sum = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                out, cache = nn.forward(model, X[idx], train=True, rng=rng)
                loss, ds = nn.batch_loss_and_grad("bce", out[:, 0], same[idx])
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite bce loss at epoch {epoch}")
                loss_sum += loss * len(idx)
                grads = nn.backward(model, cache, ds[:, None])
                nn.adamw_step(params, grads, state, opt, names)
            history.append({"epoch": epoch, "mean_loss": loss_sum / n})

        self.model_ = model
        self.history_ = history
        self.dim_ = X.shape[1]
        return self

    def set_model(self, model: nn.Mlp) -> "ZeroShotClassifier":
        self.model_ = model
        self.dim_ = model.in_dim
        self.history_ = []
        return self

    def proba(self, X) -> np.ndarray:
        """Probability of Idiomatic for each row, eval-mode forward."""
        X = as_matrix(X, "X", cols=self.dim_)
        out, _ = nn.forward(self.model_, X, train=False)
        return out[:, 0]

    def predict(self, X) -> list[Label]:
        return [
            Label.IDIOMATIC if p >= self.threshold else Label.LITERAL
            for p in self.proba(X)
        ]


def train_classifier(
    train: Corpus, provider: EmbeddingProvider, **config
) -> ZeroShotClassifier:
    """Embed a labeled corpus and fit the classifier head on it."""
    if len(train) == 0:
        raise DataError("cannot train a classifier on an empty corpus")
    labels = []
    for s in train:
        if s.label is None:
            raise DataError(f"sample {s.id!r} is unlabeled")
        labels.append(s.label)
    X = embed_corpus(train, provider)
    return ZeroShotClassifier(**config).fit(X, labels)


def predict_zeroshot(
    sample: Sample,
    clf: ZeroShotClassifier,
    provider: EmbeddingProvider,
    threshold: float | None = None,
) -> tuple[Label, float]:
    """Label a single sample: Idiomatic iff probability >= threshold."""
    threshold = clf.threshold if threshold is None else threshold
    p = float(clf.proba(provider.embed(sample)[np.newaxis, :])[0])
    label = Label.IDIOMATIC if p >= threshold else Label.LITERAL
    return label, p


def predict_corpus_zeroshot(
    corpus: Corpus,
    clf: ZeroShotClassifier,
    provider: EmbeddingProvider,
    mode: str = "classifier",
) -> list[ScoredPrediction]:
    """Prediction records for every sample, scored by prediction confidence."""
    probs = clf.proba(embed_corpus(corpus, provider))
    records = []
    for s, p in zip(corpus, probs):
        label = Label.IDIOMATIC if p >= clf.threshold else Label.LITERAL
        confidence = float(p) if label is Label.IDIOMATIC else float(1.0 - p)
        records.append(
            ScoredPrediction(
                sample_id=s.id,
                language=s.language,
                mwe=s.mwe,
                label=label,
                score=confidence,
                mode=mode,
                support_id="",
            )
        )
    return records


def majority_vote(votes: Sequence[Label]) -> Label:
    """Modal label of an odd number (>= 3) of hard votes.

    Raises:
        ConfigError: vote count is even or below 3 (oddness makes ties
            impossible by construction).
    """
    if len(votes) < 3 or len(votes) % 2 == 0:
        raise ConfigError(f"majority vote needs an odd number >= 3 of votes, got {len(votes)}")
    counts = Counter(votes)
    return max(counts, key=lambda label: counts[label])


def ensemble_predictions(
    member_predictions: Sequence[Sequence[ScoredPrediction]],
) -> list[ScoredPrediction]:
    """Majority-vote member prediction lists into one, sample by sample.

    All members must cover the same samples in the same order. The winning
    score is the winner's vote share.

    Raises:
        ConfigError: even/undersized member count or misaligned members.
    """
    if len(member_predictions) < 3 or len(member_predictions) % 2 == 0:
        raise ConfigError(
            f"ensemble needs an odd number >= 3 of members, got {len(member_predictions)}"
        )
    lengths = {len(preds) for preds in member_predictions}
    if len(lengths) != 1:
        raise ConfigError("ensemble members predicted different sample counts")

    voted: list[ScoredPrediction] = []
    for rows in zip(*member_predictions):
        ids = {r.sample_id for r in rows}
        if len(ids) != 1:
            raise ConfigError(f"ensemble members disagree on sample order: {sorted(ids)}")
        first = rows[0]
        winner = majority_vote([r.label for r in rows])
        share = sum(1 for r in rows if r.label == winner) / len(rows)
        voted.append(
            ScoredPrediction(
                sample_id=first.sample_id,
                language=first.language,
                mwe=first.mwe,
                label=winner,
                score=share,
                mode="ensemble",
                support_id="",
            )
        )
    return voted
