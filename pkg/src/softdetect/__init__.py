"""Confidence-based detection of misclassified and out-of-distribution
inputs, with threshold-free evaluation and a learned normality scorer.

The package has six parts:

* ``metrics``: AUROC / average precision / ROC and PR curves, random
  baselines, rank-sum significance.
* ``scores``: softmax, max-probability and entropy-family detector
  scores, blank-excluded sequence scoring.
* ``nn``: a small float64 GELU MLP with optional reconstruction
  decoder, manual backprop, Adam, checkpoints.
* ``data``: IDX ingestion, synthetic noise images, colored 1-D noise,
  image distortions, class-holdout splits, a bundled digit corpus.
* ``abnormality``: frozen backbone + trainable sigmoid normality
  scorer.
* ``harness`` / ``cli``: seeded end-to-end experiments and reports.

Heavy inner loops (GELU, blur, affine warps) run through numba when
available; set SOFTDETECT_NUMBA=0 to force the pure-numpy fallback.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .metrics import (
    ConfusionCounts,
    DetectionReport,
    PrCurve,
    RankSumResult,
    RocCurve,
    ScoredExample,
    auroc,
    average_precision,
    build_report,
    random_baselines,
    rank_sum_test,
    roc_curve,
)
from .scores import (
    ScoreKind,
    detector_scores,
    kl_from_uniform,
    max_prob,
    partition_by_correctness,
    score_sequence,
    softmax,
)
from .data import (
    Blur,
    ColoredNoise,
    Dataset,
    GaussianNoise,
    Rotation,
    UniformNoise,
    class_holdout_split,
    colored_noise,
    distort,
    gen_gaussian_images,
    gen_synthetic_digits,
    gen_uniform_images,
    load_idx,
    mix_signals,
    write_idx,
)
from .nn import (
    GELU_INIT_GAIN,
    AdamState,
    DenseLayer,
    Mlp,
    TrainConfig,
    adam_step,
    backward,
    build_mlp,
    evaluate,
    forward,
    init_weights,
    load_checkpoint,
    save_checkpoint,
    train_classifier,
)
from .abnormality import (
    AbnormalityModule,
    DistortionRange,
    build_module,
    make_abnormal_set,
    normality_score,
    train_scorer,
)
from .harness import (
    ExperimentConfig,
    ReportDocument,
    ReportRow,
    emit_report,
    ingest_external_scores,
    run_abmod,
    run_error_detection,
    run_ood_detection,
    to_canonical_json,
)

__all__ = [
    "__version__",
    "backend_name",
    # metrics
    "ConfusionCounts", "DetectionReport", "PrCurve", "RankSumResult",
    "RocCurve", "ScoredExample", "auroc", "average_precision",
    "build_report", "random_baselines", "rank_sum_test", "roc_curve",
    # scores
    "ScoreKind", "detector_scores", "kl_from_uniform", "max_prob",
    "partition_by_correctness", "score_sequence", "softmax",
    # data
    "Blur", "ColoredNoise", "Dataset", "GaussianNoise", "Rotation",
    "UniformNoise", "class_holdout_split", "colored_noise", "distort",
    "gen_gaussian_images", "gen_synthetic_digits", "gen_uniform_images",
    "load_idx", "mix_signals", "write_idx",
    # nn
    "GELU_INIT_GAIN", "AdamState", "DenseLayer", "Mlp", "TrainConfig",
    "adam_step", "backward", "build_mlp", "evaluate", "forward",
    "init_weights", "load_checkpoint", "save_checkpoint", "train_classifier",
    # abnormality
    "AbnormalityModule", "DistortionRange", "build_module",
    "make_abnormal_set", "normality_score", "train_scorer",
    # harness
    "ExperimentConfig", "ReportDocument", "ReportRow", "emit_report",
    "ingest_external_scores", "run_abmod", "run_error_detection",
    "run_ood_detection", "to_canonical_json",
]
