"""Threshold-free evaluation of binary detectors.

A detector assigns each example a real score with the convention
"higher means more positive". Given the score populations of the
positive and negative classes, this module computes ROC and
precision-recall curves, their areas, the random-detector baselines,
and a rank-sum significance test.

Conventions that matter for exactness:

* Ties are handled with the average-rank (Mann-Whitney) convention
  everywhere, so a tied positive/negative pair contributes 0.5. This
  makes ``auroc(P, N) + auroc(N, P) == 1.0`` hold exactly in float64.
* ``auroc`` equals the probability that a random positive outranks a
  random negative, and is invariant under negating all scores and
  swapping the class labels.
* ``average_precision`` is the non-interpolated estimator; a tied score
  group is treated as a single threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "ScoredExample",
    "ConfusionCounts",
    "RocCurve",
    "PrCurve",
    "DetectionReport",
    "RankSumResult",
    "auroc",
    "roc_curve",
    "average_precision",
    "random_baselines",
    "rank_sum_test",
    "confusion_at_threshold",
    "build_report",
]

# below this many examples per side the rank-sum normal approximation is
# flagged as unreliable
SMALL_SAMPLE_LIMIT = 8


class ScoredExample(NamedTuple):
    """A detector score paired with its ground-truth class."""

    score: float
    positive: bool


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts at a fixed decision threshold."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def tpr(self) -> float:
        return self.tp / (self.tp + self.fn)

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        return self.tpr


@dataclass(frozen=True)
class RocCurve:
    """ROC points, one per distinct threshold, plus (0,0) and (1,1)."""

    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        return float(np.trapezoid(self.tpr, self.fpr))


@dataclass(frozen=True)
class PrCurve:
    """Precision-recall points swept from the highest threshold down."""

    recall: np.ndarray
    precision: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


class RankSumResult(NamedTuple):
    z: float
    p: float
    u: float
    small_sample: bool


@dataclass(frozen=True)
class DetectionReport:
    """Summary of one positive-vs-negative score population pair.

    ``aupr_positive`` treats the first population as the positive class;
    ``aupr_negative`` negates every score and treats the second
    population as positive. AUROC is reported once because it is
    invariant under that swap.
    """

    auroc: float
    aupr_positive: float
    aupr_negative: float
    base_rate_positive: float
    n_positive: int
    n_negative: int
    mean_score_positive: float
    mean_score_negative: float
    ranksum_p: float


def _as_population(scores, name: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError(f"degenerate population: {name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"invalid score: non-finite value in {name}")
    return arr


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    n = values.size
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    is_start = np.empty(n, dtype=bool)
    is_start[0] = True
    is_start[1:] = sorted_vals[1:] != sorted_vals[:-1]
    starts = np.flatnonzero(is_start)
    ends = np.append(starts[1:], n)
    # mean of 1-based ranks start+1 .. end is (start + end + 1) / 2
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def _u_statistic(pos: np.ndarray, neg: np.ndarray) -> tuple[float, np.ndarray]:
    """Mann-Whitney U for the positive population, plus the joint ranks."""
    ranks = _average_ranks(np.concatenate([pos, neg]))
    m = pos.size
    r_pos = float(ranks[:m].sum())
    u = r_pos - m * (m + 1) / 2.0
    return u, ranks


def auroc(positives, negatives) -> float:
    """P(score of a random positive > score of a random negative), ties half.

    Computed from average-rank sums in O((m+n) log(m+n)). The expression
    below is algebraically U/(m*n) but keeps the complement identity
    auroc(P, N) + auroc(N, P) == 1.0 exact in floating point.
    """
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    u, _ = _u_statistic(pos, neg)
    mn = pos.size * neg.size
    # u and mn are exact (integers and halves), so the numerator is exact
    return 0.5 + (u - (mn - u)) / (2.0 * mn)


def roc_curve(positives, negatives) -> RocCurve:
    """ROC curve swept from +inf down, one point per distinct score."""
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]

    cum_tp = np.cumsum(labels)
    cum_fp = np.cumsum(~labels)
    # indices where a tie group of equal scores ends
    last_of_group = np.append(scores[1:] != scores[:-1], True)
    tpr = cum_tp[last_of_group] / pos.size
    fpr = cum_fp[last_of_group] / neg.size
    return RocCurve(
        fpr=np.concatenate([[0.0], fpr]),
        tpr=np.concatenate([[0.0], tpr]),
    )


def pr_curve(positives, negatives) -> PrCurve:
    """Precision-recall points at each distinct-score group boundary."""
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
    order = np.argsort(-scores, kind="stable")
    labels = labels[order]
    scores = scores[order]
    cum_tp = np.cumsum(labels)
    cum_n = np.arange(1, scores.size + 1)
    last_of_group = np.append(scores[1:] != scores[:-1], True)
    precision = cum_tp[last_of_group] / cum_n[last_of_group]
    recall = cum_tp[last_of_group] / pos.size
    return PrCurve(recall=recall, precision=precision)


def average_precision(positives, negatives) -> float:
    """Non-interpolated average precision.

    Sum over distinct-score groups of precision-at-group-boundary times
    the recall gained inside the group. Equals the mean of precision at
    each positive's rank when scores are unique. Accumulates integer
    true-positive gains and divides by the positive count once at the
    end, so a perfect ranking yields exactly 1.0.
    """
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size, bool), np.zeros(neg.size, bool)])
    order = np.argsort(-scores, kind="stable")
    labels = labels[order]
    scores = scores[order]
    cum_tp = np.cumsum(labels)
    cum_n = np.arange(1, scores.size + 1)
    last_of_group = np.append(scores[1:] != scores[:-1], True)
    precision = cum_tp[last_of_group] / cum_n[last_of_group]
    tp_gain = np.diff(np.concatenate([[0], cum_tp[last_of_group]]))
    return float(np.sum(precision * tp_gain) / pos.size)


def random_baselines(n_positive: int, n_negative: int) -> tuple[float, float]:
    """(AUROC, AUPR) a score-agnostic random detector would achieve."""
    if n_positive <= 0 or n_negative <= 0:
        raise ValueError("population counts must be positive")
    return 0.5, n_positive / (n_positive + n_negative)


def rank_sum_test(positives, negatives) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum via the normal approximation.

    Uses tie-corrected variance and a 0.5 continuity correction.
    ``small_sample`` flags inputs below SMALL_SAMPLE_LIMIT per side,
    where the approximation is rough. U = auroc * m * n.
    """
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    u, ranks = _u_statistic(pos, neg)
    m, n = pos.size, neg.size
    total = m + n

    _, counts = np.unique(np.concatenate([pos, neg]), return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    variance = (m * n / 12.0) * ((total + 1) - tie_term / (total * (total - 1)))

    small = m < SMALL_SAMPLE_LIMIT or n < SMALL_SAMPLE_LIMIT
    if variance <= 0:
        return RankSumResult(z=0.0, p=1.0, u=u, small_sample=small)
    centered = u - m * n / 2.0
    centered = math.copysign(max(abs(centered) - 0.5, 0.0), centered)
    z = centered / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return RankSumResult(z=z, p=p, u=u, small_sample=small)


def confusion_at_threshold(positives, negatives, threshold: float) -> ConfusionCounts:
    """Counts when scores >= threshold are predicted positive."""
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    tp = int(np.count_nonzero(pos >= threshold))
    fp = int(np.count_nonzero(neg >= threshold))
    return ConfusionCounts(tp=tp, fp=fp, tn=neg.size - fp, fn=pos.size - tp)


def build_report(positive_scores, negative_scores) -> DetectionReport:
    """Full detection summary for one population pair.

    The first population is the positive class in ``aupr_positive``;
    ``aupr_negative`` re-scores with all signs flipped and the second
    population as positive. Populations of fewer than 2 examples per
    class are rejected rather than silently summarized.
    """
    pos = _as_population(positive_scores, "positives")
    neg = _as_population(negative_scores, "negatives")
    if pos.size < 2 or neg.size < 2:
        raise ValueError("degenerate population: need >= 2 examples per class")
    return DetectionReport(
        auroc=auroc(pos, neg),
        aupr_positive=average_precision(pos, neg),
        aupr_negative=average_precision(-neg, -pos),
        base_rate_positive=pos.size / (pos.size + neg.size),
        n_positive=int(pos.size),
        n_negative=int(neg.size),
        mean_score_positive=float(pos.mean()),
        mean_score_negative=float(neg.mean()),
        ranksum_p=rank_sum_test(pos, neg).p,
    )


def pairwise_auroc_oracle(positives: Sequence[float], negatives: Sequence[float]) -> float:
    """O(m*n) reference: count wins plus half-ties over all pairs.

    Kept as the brute-force second route for the rank-based ``auroc``;
    only suitable for small populations.
    """
    pos = _as_population(positives, "positives")
    neg = _as_population(negatives, "negatives")
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0)
    ties = np.count_nonzero(diff == 0)
    return (wins + 0.5 * ties) / (pos.size * neg.size)
