"""One-shot idiomaticity detection via pair scoring over matching MWEs.

A head scores a pair of sentence embeddings with s = g(O(e_i, e_j)) where O
is an elementwise absolute difference (Siamese) or concatenation (Relation)
and g is a small sigmoid-terminated network. Heads train on the pretext task
"do these two same-MWE sentences carry the same label?"; at inference the
query is compared against every support sample and both the similarity score
s and the dissimilarity score 1-s compete, the maximum deciding the label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Corpus, Label, Sample, SupportIndex
from .embedding import EmbeddingProvider
from .errors import DataError, InferenceError, NumericError
from . import nn
from .validation import as_matrix, as_bool_vector


class HeadKind(enum.Enum):
    SIAMESE = "siamese"
    RELATION = "relation"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PairExample:
    """Two same-MWE samples and whether their labels agree."""

    left: Sample
    right: Sample
    same_class: bool

    def __post_init__(self) -> None:
        if self.left.mwe != self.right.mwe:
            raise DataError(
                f"pair ({self.left.id}, {self.right.id}) crosses MWEs "
                f"{self.left.mwe!r} / {self.right.mwe!r}"
            )
        if self.left is self.right or (
            self.left.id == self.right.id and self.left.split == self.right.split
        ):
            raise DataError(f"self-pair for sample {self.left.id!r}")


@dataclass(frozen=True)
class ScoredPrediction:
    """Winning candidate of the max-of-similarity/dissimilarity rule."""

    sample_id: str
    language: str
    mwe: str
    label: Label
    score: float
    mode: str  # similar | dissimilar (fewshot); classifier | ensemble (zeroshot)
    support_id: str


def build_pairs(corpus: Corpus) -> list[PairExample]:
    """All unordered same-MWE pairs, once each, in corpus-order orientation.

    An MWE with k samples contributes C(k, 2) pairs; singleton MWEs
    contribute nothing. Cross-MWE pairs and self-pairs never occur.

    Raises:
        DataError: a sample is unlabeled.
    """
    by_mwe: dict[str, list[Sample]] = {}
    for s in corpus:
        if s.label is None:
            raise DataError(f"sample {s.id!r} is unlabeled; cannot build pairs")
        by_mwe.setdefault(s.mwe, []).append(s)

    pairs: list[PairExample] = []
    for samples in by_mwe.values():
        for i in range(len(samples)):
            for j in range(i + 1, len(samples)):
                pairs.append(
                    PairExample(
                        left=samples[i],
                        right=samples[j],
                        same_class=samples[i].label == samples[j].label,
                    )
                )
    return pairs


class _PairHead(BaseEstimator):
    """Shared training loop for the two pair-scoring heads.

    Subclasses define the combine operator, the head architecture, and the
    loss. Follows the estimator convention: hyperparameters in ``__init__``,
    learned state in ``model_`` / ``history_`` after ``fit``.
    """

    kind: HeadKind
    loss_kind: str

    def __init__(
        self,
        epochs: int = 100,
        batch_size: int = 32,
        learning_rate: float = 2e-5,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        dropout: float = 0.5,
        seed: int = 0,
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.dropout = dropout
        self.seed = seed

    # subclass hooks -----------------------------------------------------

    def _build_model(self, dim: int, rng: nn.Rng) -> nn.Mlp:
        raise NotImplementedError

    def _combine(self, e_left: np.ndarray, e_right: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _flip_left_right(self) -> bool:
        return False

    # estimator API ------------------------------------------------------

    def fit(self, E_left: np.ndarray, E_right: np.ndarray, same_class) -> "_PairHead":
        """Train on embedded pairs.

        ``E_left``/``E_right`` are (n, d) matrices in canonical orientation;
        ``same_class`` is a boolean vector. Pairs are reshuffled every epoch
        with the seeded generator; Siamese pairs additionally flip
        orientation at random each epoch so the head cannot key on argument
        order.
        """
        E_left = as_matrix(E_left, "E_left")
        E_right = as_matrix(E_right, "E_right", cols=E_left.shape[1])
        same = as_bool_vector(same_class, "same_class", length=E_left.shape[0])
        if E_left.shape[0] == 0:
            raise DataError("cannot train a head on an empty pair list")

        rng = nn.make_rng(self.seed)
        dim = E_left.shape[1]
        model = self._build_model(dim, rng)
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

        n = E_left.shape[0]
        history: list[dict] = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            if self._flip_left_right():
                flips = rng.random(n) < 0.5
            else:
                flips = np.zeros(n, dtype=bool)
            loss_sum = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                left = np.where(flips[idx, None], E_right[idx], E_left[idx])
                right = np.where(flips[idx, None], E_left[idx], E_right[idx])
                features = self._combine(left, right)
                out, cache = nn.forward(model, features, train=True, rng=rng)
                s = out[:, 0]
                loss, ds = nn.batch_loss_and_grad(self.loss_kind, s, same[idx])
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite {self.loss_kind} loss at epoch {epoch}"
                    )
                loss_sum += loss * len(idx)
                grads = nn.backward(model, cache, ds[:, None])
                nn.adamw_step(params, grads, state, opt, names)
            history.append({"epoch": epoch, "mean_loss": loss_sum / n})

        self.model_ = model
        self.history_ = history
        self.dim_ = dim
        return self

    def score_pairs(self, E_left: np.ndarray, E_right: np.ndarray) -> np.ndarray:
        """Eval-mode scores for rows of embedded pairs, clamped away from the
        endpoints so they stay strictly inside (0, 1) even when the sigmoid
        saturates in floating point."""
        E_left = as_matrix(E_left, "E_left", cols=self.dim_)
        E_right = as_matrix(E_right, "E_right", cols=self.dim_)
        out, _ = nn.forward(self.model_, self._combine(E_left, E_right), train=False)
        return nn.clamp_prob(out[:, 0])

    def score_one(self, e_left: np.ndarray, e_right: np.ndarray) -> float:
        return float(self.score_pairs(e_left[np.newaxis, :], e_right[np.newaxis, :])[0])

    def set_model(self, model: nn.Mlp) -> "_PairHead":
        """Adopt externally built parameters (model files, hand-set tests)."""
        self.model_ = model
        self.dim_ = model.in_dim if self.kind is HeadKind.SIAMESE else model.in_dim // 2
        self.history_ = []
        return self


class SiameseHead(_PairHead):
    """Single sigmoid-terminated dense layer over the elementwise absolute
    difference of the pair.

    The absolute value makes the score orientation-symmetric: a signed
    difference through a linear layer cannot score both cross-class
    orientations below 0.5 while keeping same-class pairs above it (summing
    the two cross-class constraints forces the bias negative, the same-class
    one forces it positive), so the signed variant cannot learn the pretext
    task at all.
    """

    kind = HeadKind.SIAMESE
    loss_kind = "bce"

    def _build_model(self, dim: int, rng: nn.Rng) -> nn.Mlp:
        return nn.init_mlp([dim, 1], ["sigmoid"], [0.0], rng)

    def _combine(self, e_left, e_right):
        return np.abs(e_left - e_right)

    def _flip_left_right(self) -> bool:
        return True


class RelationHead(_PairHead):
    """Three dense layers (2d -> d -> d/2 -> 1) with ReLU hidden activations
    and a sigmoid output, over the concatenated pair."""

    kind = HeadKind.RELATION
    loss_kind = "mse"

    def _build_model(self, dim: int, rng: nn.Rng) -> nn.Mlp:
        dims = [2 * dim, dim, max(1, dim // 2), 1]
        return nn.init_mlp(
            dims,
            ["relu", "relu", "sigmoid"],
            [self.dropout, self.dropout, 0.0],
            rng,
        )

    def _combine(self, e_left, e_right):
        return np.concatenate([e_left, e_right], axis=1)


def make_head(kind: HeadKind | str, **hyper) -> _PairHead:
    kind = HeadKind(kind) if isinstance(kind, str) else kind
    cls = SiameseHead if kind is HeadKind.SIAMESE else RelationHead
    return cls(**hyper)


def train_head(
    kind: HeadKind | str,
    pairs: Sequence[PairExample],
    provider: EmbeddingProvider,
    **hyper,
) -> _PairHead:
    """Embed the pairs in canonical orientation and fit the chosen head."""
    if not pairs:
        raise DataError("cannot train a head on an empty pair list")
    head = make_head(kind, **hyper)
    E_left = np.stack([provider.embed(p.left) for p in pairs])
    E_right = np.stack([provider.embed(p.right) for p in pairs])
    same = np.array([p.same_class for p in pairs], dtype=bool)
    return head.fit(E_left, E_right, same)


def predict_oneshot(
    query: Sample,
    support: Sequence[Sample],
    head: _PairHead,
    provider: EmbeddingProvider,
) -> ScoredPrediction:
    """Classify a query against its support set.

    For every support sample with score s two candidates compete:
    (s, same label) and (1-s, opposite label). The best-scoring candidate
    wins; exact ties prefer similarity over dissimilarity, then earlier
    support samples. The support sample is always the head's left argument.

    Raises:
        InferenceError: empty support set, or a support MWE differing from
            the query's.
        DataError: an unlabeled support sample.
    """
    if not support:
        raise InferenceError(f"empty support set for MWE {query.mwe!r}")
    for sup in support:
        if sup.mwe != query.mwe:
            raise InferenceError(
                f"support sample {sup.id!r} has MWE {sup.mwe!r}, query has {query.mwe!r}"
            )
        if sup.label is None:
            raise DataError(f"support sample {sup.id!r} is unlabeled")

    e_query = provider.embed(query)
    E_support = np.stack([provider.embed(sup) for sup in support])
    scores = head.score_pairs(E_support, np.broadcast_to(e_query, E_support.shape))

    # Similarity candidates first, each group in support order, so that a
    # strict > comparison implements the documented tie rule.
    candidates: list[tuple[float, str, Label, str]] = []
    for sup, s in zip(support, scores):
        candidates.append((float(s), "similar", sup.label, sup.id))
    for sup, s in zip(support, scores):
        candidates.append((1.0 - float(s), "dissimilar", sup.label.opposite(), sup.id))

    best = candidates[0]
    for cand in candidates[1:]:
        if cand[0] > best[0]:
            best = cand

    return ScoredPrediction(
        sample_id=query.id,
        language=query.language,
        mwe=query.mwe,
        label=best[2],
        score=best[0],
        mode=best[1],
        support_id=best[3],
    )


def evaluate_oneshot(
    queries: Corpus,
    index: SupportIndex,
    head: _PairHead,
    provider: EmbeddingProvider,
) -> list[ScoredPrediction]:
    """One prediction per query sample, via :func:`predict_oneshot`.

    Raises:
        InferenceError: any query MWE is absent from the support index
            (all missing MWEs are listed).
    """
    missing = sorted({q.mwe for q in queries if q.mwe not in index})
    if missing:
        raise InferenceError(
            "query MWEs missing from the support index: " + ", ".join(missing)
        )
    return [predict_oneshot(q, index[q.mwe], head, provider) for q in queries]


def write_predictions(predictions: Sequence[ScoredPrediction], path: str | Path) -> None:
    """Emit the prediction TSV shared by the one-shot and zero-shot paths."""
    lines = ["id\tlanguage\tmwe\tpredicted_label\twinning_score\twinning_mode\tsupport_id"]
    for p in predictions:
        lines.append(
            "\t".join(
                [p.sample_id, p.language, p.mwe, p.label.value, repr(p.score), p.mode, p.support_id]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path: str | Path) -> list[ScoredPrediction]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"prediction file not found: {path}")
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = "id\tlanguage\tmwe\tpredicted_label\twinning_score\twinning_mode\tsupport_id"
    if not lines or lines[0] != header:
        raise DataError(f"{path}: not a prediction TSV (bad header)")
    predictions = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 7:
            raise DataError(f"{path}:{lineno}: expected 7 fields, found {len(fields)}")
        try:
            label = Label(fields[3])
            score = float(fields[4])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        predictions.append(
            ScoredPrediction(
                sample_id=fields[0],
                language=fields[1],
                mwe=fields[2],
                label=label,
                score=score,
                mode=fields[5],
                support_id=fields[6],
            )
        )
    return predictions
