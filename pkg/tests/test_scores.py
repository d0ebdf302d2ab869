"""Softmax detector scores, blank exclusion, correctness partitioning."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softdetect.scores import (
    ScoreKind,
    detector_scores,
    kl_from_uniform,
    max_prob,
    neg_entropy,
    partition_by_correctness,
    score_sequence,
    softmax,
)


class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_large_logits_stable(self):
        p = softmax(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(p))
        assert p[0] > 0.999999
        assert abs(p.sum() - 1.0) < 1e-12

    def test_uniform_logits_k10(self):
        p = softmax(np.full(10, 3.7))
        assert abs(p.max() - 0.1) < 1e-12

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        v = rng.normal(size=7) * 10
        np.testing.assert_allclose(softmax(v), softmax(v + 123.456), atol=1e-12)

    def test_sums_to_one_at_extreme_magnitudes(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            v = rng.uniform(-1e4, 1e4, size=6)
            assert abs(softmax(v).sum() - 1.0) < 1e-12

    def test_batch_axis(self):
        rng = np.random.default_rng(6)
        batch = rng.normal(size=(5, 4))
        rows = softmax(batch)
        for i in range(5):
            np.testing.assert_array_equal(rows[i], softmax(batch[i]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            softmax(np.array([np.nan, 0.0]))
        with pytest.raises(ValueError):
            softmax(np.array([np.inf, 0.0]))

    def test_rejects_single_class(self):
        with pytest.raises(ValueError):
            softmax(np.array([1.0]))


class TestMaxProb:
    def test_basic(self):
        score, cls = max_prob(np.array([0.1, 0.7, 0.2]))
        assert score == 0.7
        assert cls == 1

    def test_uniform_tie_breaks_low_index(self):
        score, cls = max_prob(np.full(5, 0.2))
        assert score == 0.2
        assert cls == 0

    def test_known_softmax_value(self):
        # softmax(2,1,0) -> max prob e^2/(e^2+e+1)
        p = softmax(np.array([2.0, 1.0, 0.0]))
        score, cls = max_prob(p)
        assert abs(score - 0.6652409557748219) < 1e-12
        assert cls == 0


class TestKlFromUniform:
    def test_uniform_is_zero(self):
        assert abs(kl_from_uniform(np.full(10, 0.1))) < 1e-12

    def test_one_hot_is_log_k(self):
        p = np.zeros(10)
        p[3] = 1.0
        assert abs(kl_from_uniform(p) - math.log(10)) < 1e-12

    def test_bounds(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            p = softmax(rng.normal(size=8) * 3)
            kl = kl_from_uniform(p)
            assert -1e-12 <= kl <= math.log(8) + 1e-12

    def test_ranking_matches_neg_entropy(self):
        rng = np.random.default_rng(10)
        dists = softmax(rng.normal(size=(40, 6)) * 2)
        kls = np.array([kl_from_uniform(p) for p in dists])
        negents = np.array([neg_entropy(p) for p in dists])
        np.testing.assert_array_equal(np.argsort(kls), np.argsort(negents))
        # the two differ by exactly log K
        np.testing.assert_allclose(kls - negents, math.log(6), atol=1e-12)


class TestScoreSequence:
    def test_blank_exclusion_single_frame(self):
        got = score_sequence(
            [np.array([5.0, 1.0, 1.0])],
            blank_index=0,
            kind=ScoreKind.MAX_PROB,
            aggregator="mean",
        )
        assert abs(got - 0.5) < 1e-12

    def test_no_blank_single_frame_equals_max_prob(self):
        v = np.array([0.3, 2.0, -1.0])
        got = score_sequence([v], blank_index=None, kind=ScoreKind.MAX_PROB,
                             aggregator="mean")
        assert got == max_prob(softmax(v))[0]

    def test_mean_aggregation_arithmetic(self):
        # two-class frames engineered to hit max probs 0.9, 0.5, 0.7
        frames = [
            np.array([math.log(9.0), 0.0]),
            np.array([0.0, 0.0]),
            np.array([math.log(7.0 / 3.0), 0.0]),
        ]
        got = score_sequence(frames, blank_index=None, kind=ScoreKind.MAX_PROB,
                             aggregator="mean")
        assert abs(got - 0.7) < 1e-12

    @pytest.mark.parametrize("agg,expect", [("median", 0.7), ("min", 0.5)])
    def test_other_aggregators(self, agg, expect):
        frames = [
            np.array([math.log(9.0), 0.0]),
            np.array([0.0, 0.0]),
            np.array([math.log(7.0 / 3.0), 0.0]),
        ]
        got = score_sequence(frames, blank_index=None, kind=ScoreKind.MAX_PROB,
                             aggregator=agg)
        assert abs(got - expect) < 1e-12

    @given(st.integers(0, 5000))
    @settings(max_examples=100, deadline=None)
    def test_delete_equals_renormalize(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(3, 9))
        v = rng.normal(size=k) * 4
        blank = int(rng.integers(0, k))
        deleted = softmax(np.delete(v, blank))
        full = softmax(v)
        renorm = np.delete(full, blank) / (1.0 - full[blank])
        np.testing.assert_allclose(deleted, renorm, atol=1e-12)

    def test_blank_with_two_classes_rejected(self):
        with pytest.raises(ValueError):
            score_sequence([np.array([1.0, 0.0])], blank_index=0,
                           kind=ScoreKind.MAX_PROB, aggregator="mean")

    def test_blank_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            score_sequence([np.array([1.0, 0.0, 2.0])], blank_index=3,
                           kind=ScoreKind.MAX_PROB, aggregator="mean")

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            score_sequence([], blank_index=None, kind=ScoreKind.MAX_PROB,
                           aggregator="mean")


class TestDetectorScores:
    def test_batch_matches_per_row(self):
        rng = np.random.default_rng(13)
        probs = softmax(rng.normal(size=(20, 5)) * 2)
        batch = detector_scores(probs, ScoreKind.MAX_PROB)
        singles = np.array([max_prob(p)[0] for p in probs])
        np.testing.assert_array_equal(batch, singles)

    def test_kl_kind(self):
        rng = np.random.default_rng(14)
        probs = softmax(rng.normal(size=(10, 4)))
        batch = detector_scores(probs, ScoreKind.KL_FROM_UNIFORM)
        singles = np.array([kl_from_uniform(p) for p in probs])
        np.testing.assert_allclose(batch, singles, atol=1e-14)


class TestPartitionByCorrectness:
    def test_basic_split(self):
        succ, err = partition_by_correctness(
            predictions=[1, 2], labels=[1, 0], scores=[0.9, 0.6]
        )
        assert succ.tolist() == [0.9]
        assert err.tolist() == [0.6]

    def test_all_correct_gives_empty_errors(self):
        succ, err = partition_by_correctness([0, 1], [0, 1], [0.5, 0.6])
        assert len(err) == 0
        assert len(succ) == 2

    def test_lengths_sum(self):
        rng = np.random.default_rng(15)
        preds = rng.integers(0, 3, size=50)
        labels = rng.integers(0, 3, size=50)
        scores = rng.uniform(size=50)
        succ, err = partition_by_correctness(preds, labels, scores)
        assert len(succ) + len(err) == 50

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            partition_by_correctness([1], [1, 2], [0.5, 0.5])
