"""Detector scores derived from classifier outputs.

The baseline detector scores an example by the maximum softmax
probability of its predicted class; alternatives are the KL divergence
of the softmax distribution from uniform and the negative entropy,
which rank identically (they differ by the constant log K).

``score_sequence`` handles per-frame logits from sequence models whose
output alphabet includes a no-emission blank symbol: the blank logit is
removed before the softmax so that frames confidently predicting blank
do not masquerade as confident predictions.
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = [
    "ScoreKind",
    "softmax",
    "max_prob",
    "kl_from_uniform",
    "neg_entropy",
    "detector_scores",
    "score_sequence",
    "partition_by_correctness",
]


class ScoreKind(enum.Enum):
    """Available detector scores; higher always means more in-distribution."""

    MAX_PROB = "max_prob"
    KL_FROM_UNIFORM = "kl_from_uniform"
    NEG_ENTROPY = "neg_entropy"


def _check_logits(logits) -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    if arr.shape[-1] < 2:
        raise ValueError("need at least 2 classes")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite logits")
    return arr


def softmax(logits, axis: int = -1) -> np.ndarray:
    """Stable softmax along ``axis``: shift by the max, exponentiate, normalize.

    Safe for logit magnitudes up to 1e4 and beyond; the largest shifted
    logit is always 0 so exp never overflows.
    """
    arr = _check_logits(logits)
    shifted = arr - arr.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def max_prob(probs) -> tuple[float, int]:
    """The largest probability and its class; ties go to the lowest index."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("max_prob expects a single distribution")
    idx = int(np.argmax(p))
    return float(p[idx]), idx


def _entropy(probs: np.ndarray, axis: int = -1) -> np.ndarray:
    # p log p -> 0 as p -> 0; mask zeros instead of special-casing with errors
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0.0, probs * np.log(probs), 0.0)
    return -terms.sum(axis=axis)


def kl_from_uniform(probs) -> float:
    """KL(p || uniform) = log K - H(p), in nats. Zero iff p is uniform."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("kl_from_uniform expects a single distribution")
    return float(np.log(p.size) - _entropy(p))


def neg_entropy(probs) -> float:
    """Negative Shannon entropy in nats; ranks identically to kl_from_uniform."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("neg_entropy expects a single distribution")
    return float(-_entropy(p))


def detector_scores(probs, kind: ScoreKind = ScoreKind.MAX_PROB) -> np.ndarray:
    """Score a batch of softmax distributions (rows) under ``kind``."""
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if kind is ScoreKind.MAX_PROB:
        return p.max(axis=1)
    if kind is ScoreKind.KL_FROM_UNIFORM:
        return np.log(p.shape[1]) - _entropy(p, axis=1)
    if kind is ScoreKind.NEG_ENTROPY:
        return -_entropy(p, axis=1)
    raise ValueError(f"unknown score kind: {kind!r}")


_AGGREGATORS = {
    "mean": np.mean,
    "median": np.median,
    "min": np.min,
}


def score_sequence(
    frames,
    blank_index: int | None = None,
    kind: ScoreKind = ScoreKind.MAX_PROB,
    aggregator: str = "mean",
) -> float:
    """One detector score for a sequence of per-frame logits.

    With ``blank_index`` set, that logit is deleted from every frame
    before the softmax, which is the same thing as renormalizing the
    full softmax over the remaining classes. Per-frame scores are then
    combined by the chosen aggregator.
    """
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("frames must be a non-empty (T, K) array")
    if aggregator not in _AGGREGATORS:
        raise ValueError(f"unknown aggregator: {aggregator!r}")
    k = arr.shape[1]
    if blank_index is not None:
        if not 0 <= blank_index < k:
            raise ValueError("blank_index out of range")
        if k < 3:
            raise ValueError("blank exclusion needs at least 3 classes")
        arr = np.delete(arr, blank_index, axis=1)
    probs = softmax(arr, axis=1)
    per_frame = detector_scores(probs, kind)
    return float(_AGGREGATORS[aggregator](per_frame))


def partition_by_correctness(predictions, labels, scores) -> tuple[np.ndarray, np.ndarray]:
    """Split scores into (correctly classified, misclassified) populations."""
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    if not (preds.shape == labs.shape == s.shape) or preds.ndim != 1 or preds.size < 1:
        raise ValueError("predictions, labels, scores must be equal-length 1-D")
    correct = preds == labs
    return s[correct], s[~correct]
