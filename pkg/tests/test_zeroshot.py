from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idiomdetect import nn
from idiomdetect.corpus import Label, SplitKind
from idiomdetect.embedding import EmbeddingTable, TableProvider
from idiomdetect.errors import ConfigError, DataError
from idiomdetect.fewshot import ScoredPrediction
from idiomdetect.zeroshot import (
    ZeroShotClassifier,
    ensemble_predictions,
    majority_vote,
    predict_corpus_zeroshot,
    predict_zeroshot,
    train_classifier,
)

from conftest import make_corpus, make_sample


def separable_data(n=60, dim=16, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack(
        [
            rng.normal(size=(half, dim)) + 6.0,
            rng.normal(size=(n - half, dim)) - 6.0,
        ]
    )
    y = np.array([1] * half + [0] * (n - half))
    order = rng.permutation(n)
    return X[order], y[order]


def classifier_with(weight, bias, threshold=0.5):
    clf = ZeroShotClassifier(threshold=threshold)
    mlp = nn.Mlp(
        layers=[
            nn.DenseLayer(
                weight=np.asarray(weight, dtype=float).reshape(1, -1),
                bias=np.array([float(bias)]),
            )
        ],
        activations=["sigmoid"],
    )
    return clf.set_model(mlp)


class TestZeroShotClassifier:
    def test_separable_data_reaches_high_accuracy(self):
        X, y = separable_data()
        clf = ZeroShotClassifier(
            hidden_widths=(8,), epochs=50, learning_rate=1e-2, seed=0
        ).fit(X, y)
        preds = clf.predict(X)
        acc = np.mean([(p is Label.IDIOMATIC) == bool(t) for p, t in zip(preds, y)])
        assert acc >= 0.99

    def test_zero_epochs_returns_initialization(self):
        X, y = separable_data(n=10)
        clf = ZeroShotClassifier(hidden_widths=(4,), epochs=0, seed=3).fit(X, y)
        expected = nn.init_mlp([16, 4, 1], ["relu", "sigmoid"], [0.5, 0.0], nn.make_rng(3))
        for got, want in zip(clf.model_.params(), expected.params()):
            assert np.array_equal(got, want)

    def test_same_seed_identical_params(self):
        X, y = separable_data(n=24)
        a = ZeroShotClassifier(epochs=5, seed=11, learning_rate=1e-3).fit(X, y)
        b = ZeroShotClassifier(epochs=5, seed=11, learning_rate=1e-3).fit(X, y)
        for pa, pb in zip(a.model_.params(), b.model_.params()):
            assert np.array_equal(pa, pb)

    def test_labels_accepted_in_multiple_forms(self):
        X, _ = separable_data(n=4)
        for y in ([1, 0, 1, 0], [Label.IDIOMATIC, Label.LITERAL] * 2, ["Idiomatic", "Literal"] * 2):
            ZeroShotClassifier(epochs=0).fit(X, y)

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            ZeroShotClassifier(epochs=1).fit(np.empty((0, 4)), [])

    def test_probability_matches_forward_oracle(self):
        rng = np.random.default_rng(2)
        w, b = rng.normal(size=6), 0.3
        clf = classifier_with(w, b)
        x = rng.normal(size=6)
        p = float(clf.proba(x[np.newaxis, :])[0])
        assert abs(p - 1.0 / (1.0 + np.exp(-(w @ x + b)))) < 1e-12


class TestPredictZeroShot:
    def test_boundary_probability_is_idiomatic(self):
        clf = classifier_with(np.zeros(4), 0.0)  # probability exactly 0.5
        sample = make_sample("a")
        table = EmbeddingTable(dim=4)
        table.add(str(sample.split), "a", np.ones(4, dtype=np.float32))
        label, p = predict_zeroshot(sample, clf, TableProvider(table))
        assert p == 0.5
        assert label is Label.IDIOMATIC

    def test_below_threshold_is_literal(self):
        logit_049 = float(np.log(0.49 / 0.51))
        clf = classifier_with(np.zeros(4), logit_049)
        sample = make_sample("a")
        table = EmbeddingTable(dim=4)
        table.add(str(sample.split), "a", np.zeros(4, dtype=np.float32))
        label, p = predict_zeroshot(sample, clf, TableProvider(table))
        assert p == pytest.approx(0.49, abs=1e-12)
        assert label is Label.LITERAL

    @settings(max_examples=60)
    @given(
        st.floats(min_value=0.01, max_value=0.99),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_threshold_monotonicity(self, p, t1, t2):
        # raising the threshold never converts Literal -> Idiomatic
        low, high = min(t1, t2), max(t1, t2)
        sample = make_sample("a")
        table = EmbeddingTable(dim=2)
        table.add(str(sample.split), "a", np.zeros(2, dtype=np.float32))
        provider = TableProvider(table)
        bias = float(np.log(p / (1.0 - p)))
        label_low, _ = predict_zeroshot(sample, classifier_with(np.zeros(2), bias), provider, threshold=low)
        label_high, _ = predict_zeroshot(sample, classifier_with(np.zeros(2), bias), provider, threshold=high)
        if label_high is Label.IDIOMATIC:
            assert label_low is Label.IDIOMATIC

    def test_corpus_prediction_records(self):
        corpus = make_corpus(
            [make_sample("a", mwe="m1"), make_sample("b", mwe="m2", label=Label.LITERAL)],
            split=SplitKind.DEV,
        )
        table = EmbeddingTable(dim=4)
        rng = np.random.default_rng(0)
        for s in corpus:
            table.add(str(SplitKind.DEV), s.id, rng.normal(size=4).astype(np.float32))
        clf = classifier_with(rng.normal(size=4), 0.1)
        records = predict_corpus_zeroshot(corpus, clf, TableProvider(table))
        assert [r.sample_id for r in records] == ["a", "b"]
        assert all(r.mode == "classifier" and r.support_id == "" for r in records)
        # winning score is the confidence in the predicted label
        for r in records:
            assert r.score >= 0.5


class TestMajorityVote:
    def test_basic_votes(self):
        assert majority_vote([Label.IDIOMATIC, Label.IDIOMATIC, Label.LITERAL]) is Label.IDIOMATIC
        assert majority_vote([Label.LITERAL] * 3) is Label.LITERAL

    def test_even_or_small_counts_rejected(self):
        with pytest.raises(ConfigError):
            majority_vote([Label.IDIOMATIC, Label.LITERAL])
        with pytest.raises(ConfigError):
            majority_vote([Label.IDIOMATIC])
        with pytest.raises(ConfigError):
            majority_vote([Label.IDIOMATIC] * 4)

    def test_matches_counting_oracle_on_random_votes(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            votes = [
                Label.IDIOMATIC if rng.random() < 0.5 else Label.LITERAL
                for _ in range(int(rng.choice([3, 5, 7])))
            ]
            counts = Counter(votes)
            expected = (
                Label.IDIOMATIC
                if counts[Label.IDIOMATIC] > counts[Label.LITERAL]
                else Label.LITERAL
            )
            assert majority_vote(votes) is expected

    def test_permutation_invariance(self):
        votes = [Label.IDIOMATIC, Label.LITERAL, Label.IDIOMATIC, Label.LITERAL, Label.IDIOMATIC]
        rng = np.random.default_rng(1)
        base = majority_vote(votes)
        for _ in range(10):
            shuffled = [votes[i] for i in rng.permutation(5)]
            assert majority_vote(shuffled) is base

    def test_unanimous_equals_any_member(self):
        votes = [Label.LITERAL] * 5
        assert majority_vote(votes) is votes[0]


def prediction(sid, label, mode="classifier"):
    return ScoredPrediction(sid, "EN", "m", label, 0.8, mode, "")


class TestEnsemble:
    def test_votes_and_share(self):
        members = [
            [prediction("a", Label.IDIOMATIC), prediction("b", Label.LITERAL)],
            [prediction("a", Label.IDIOMATIC), prediction("b", Label.IDIOMATIC)],
            [prediction("a", Label.LITERAL), prediction("b", Label.LITERAL)],
        ]
        voted = ensemble_predictions(members)
        assert [v.label for v in voted] == [Label.IDIOMATIC, Label.LITERAL]
        assert [v.score for v in voted] == [pytest.approx(2 / 3), pytest.approx(2 / 3)]
        assert all(v.mode == "ensemble" for v in voted)

    def test_even_member_count_rejected(self):
        members = [[prediction("a", Label.IDIOMATIC)]] * 2
        with pytest.raises(ConfigError):
            ensemble_predictions(members)

    def test_misaligned_members_rejected(self):
        members = [
            [prediction("a", Label.IDIOMATIC)],
            [prediction("b", Label.IDIOMATIC)],
            [prediction("a", Label.LITERAL)],
        ]
        with pytest.raises(ConfigError, match="order"):
            ensemble_predictions(members)

    def test_unanimous_members_equal_member_prediction(self):
        members = [[prediction("a", Label.LITERAL)]] * 3
        voted = ensemble_predictions(members)
        assert voted[0].label is Label.LITERAL
        assert voted[0].score == 1.0


class TestTrainClassifierFromCorpus:
    def test_corpus_wrapper_trains(self):
        corpus = make_corpus(
            [
                make_sample("a", mwe="m1", label=Label.IDIOMATIC, split=SplitKind.ZERO_SHOT_TRAIN),
                make_sample("b", mwe="m2", label=Label.LITERAL, split=SplitKind.ZERO_SHOT_TRAIN),
            ],
            split=SplitKind.ZERO_SHOT_TRAIN,
        )
        table = EmbeddingTable(dim=4)
        table.add("zero_shot_train", "a", np.full(4, 2.0, dtype=np.float32))
        table.add("zero_shot_train", "b", np.full(4, -2.0, dtype=np.float32))
        clf = train_classifier(corpus, TableProvider(table), epochs=3, seed=0)
        assert len(clf.history_) == 3

    def test_unlabeled_sample_rejected(self):
        corpus = make_corpus(
            [make_sample("a", label=None, split=SplitKind.TEST)], split=SplitKind.TEST
        )
        with pytest.raises(DataError):
            train_classifier(corpus, TableProvider(EmbeddingTable(dim=4)))
