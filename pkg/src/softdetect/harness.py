"""Reproducible experiment driver and report emission.

An ExperimentConfig (JSON file or dict) plus a mandatory seed fully
determines an experiment: train a model, build the evaluation
populations, score them, and emit a report document. Rerunning the same
config and seed gives a byte-identical canonical report (timestamp
aside). Externally produced logits or scores can be evaluated through
the same reporting path without any training.

Reports carry one row per score-population pair, each with the full
detection summary, and a provenance block (config hash, seed, package
version, compute backend).
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import hashlib
import io
import json
import os
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np

from . import abnormality as ab
from . import data as D
from . import nn
from ._kernels import backend_name
from .metrics import DetectionReport, auroc, build_report, random_baselines
from .scores import ScoreKind, detector_scores, partition_by_correctness

__all__ = [
    "ConfigError",
    "DataError",
    "ExperimentConfig",
    "ReportRow",
    "ReportDocument",
    "run_error_detection",
    "run_ood_detection",
    "run_abmod",
    "ingest_external_scores",
    "emit_report",
    "to_canonical_json",
]

REPORT_FORMAT = 1

VALID_TASKS = ("error-detection", "ood-detection", "abmod")
VALID_OOD_SOURCES = ("gaussian", "uniform", "class-holdout", "distorted", "external-jsonl")
VALID_SCORE_KINDS = tuple(k.value for k in ScoreKind)

# seed-derivation tags, so every random stream is independent but fully
# determined by the one config seed
_TAG_TRAIN_DATA = 0
_TAG_TEST_DATA = 1
_TAG_MODEL = 2
_TAG_OOD = 3
_TAG_SCORER = 4
_TAG_DISTORT = 5


class ConfigError(ValueError):
    """Invalid configuration or flags (usage error, exit code 1)."""


class DataError(ValueError):
    """Invalid or degenerate data (exit code 2)."""


_CONFIG_FIELDS = {
    "task": str,
    "seed": int,
    "score_kind": str,
    "train_size": int,
    "test_size": int,
    "ood_size": int,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "hidden_widths": list,
    "ood_sources": list,
    "held_out_classes": list,
    "reconstruction_weight": float,
    "scorer_epochs": int,
    "train_images": str,
    "train_labels": str,
    "test_images": str,
    "test_labels": str,
    "external_scores": str,
    "checkpoint_in": str,
    "out": str,
}


@dataclasses.dataclass
class ExperimentConfig:
    """Everything an experiment needs; the seed is never optional."""

    task: str
    seed: int
    score_kind: str = "max_prob"
    train_size: int = 10000
    test_size: int = 2000
    ood_size: int = 2000
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    hidden_widths: tuple = (256, 256, 256)
    ood_sources: tuple = ("gaussian", "uniform")
    held_out_classes: tuple = (8, 9)
    reconstruction_weight: float = 1.0
    scorer_epochs: int = 2
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    external_scores: Optional[str] = None
    checkpoint_in: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.task not in VALID_TASKS:
            raise ConfigError(f"task must be one of {VALID_TASKS}, got {self.task!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer (no wall-clock seeding)")
        if self.score_kind not in VALID_SCORE_KINDS:
            raise ConfigError(f"score_kind must be one of {VALID_SCORE_KINDS}")
        for name in ("train_size", "test_size", "ood_size", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for src in self.ood_sources:
            if src not in VALID_OOD_SOURCES:
                raise ConfigError(f"unknown ood source {src!r}")
        if "external-jsonl" in self.ood_sources and not self.external_scores:
            raise ConfigError("external-jsonl source needs external_scores path")
        if self.task == "abmod" and "external-jsonl" in self.ood_sources:
            raise ConfigError("abmod scores raw inputs; external-jsonl rows carry none")
        for name in ("train_images", "train_labels", "test_images", "test_labels",
                     "external_scores", "checkpoint_in"):
            path = getattr(self, name)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"{name} path does not exist: {path}")
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)
        self.ood_sources = tuple(self.ood_sources)
        self.held_out_classes = tuple(int(c) for c in self.held_out_classes)

    @classmethod
    def from_dict(cls, raw: dict, overrides: Optional[dict] = None) -> "ExperimentConfig":
        merged = dict(raw)
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        unknown = set(merged) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in merged:
            raise ConfigError("config is missing the mandatory seed")
        if "task" not in merged:
            raise ConfigError("config is missing the task")
        return cls(**merged)

    @classmethod
    def from_json(cls, path, overrides: Optional[dict] = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw, overrides)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["hidden_widths"] = list(self.hidden_widths)
        out["ood_sources"] = list(self.ood_sources)
        out["held_out_classes"] = list(self.held_out_classes)
        return out

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _derive_seed(config: ExperimentConfig, tag: int, extra: int = 0) -> int:
    return int(np.random.SeedSequence((config.seed, tag, extra)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# report document


@dataclasses.dataclass
class ReportRow:
    name: str
    detector: str
    report: DetectionReport
    mean_pred_prob: Optional[float] = None
    test_error: Optional[float] = None
    pooled: bool = True

    def to_dict(self) -> dict:
        base_auroc, base_aupr = random_baselines(
            self.report.n_positive, self.report.n_negative
        )
        return {
            "name": self.name,
            "detector": self.detector,
            "auroc": self.report.auroc,
            "aupr_in": self.report.aupr_positive,
            "aupr_out": self.report.aupr_negative,
            "base_auroc": base_auroc,
            "base_aupr_in": base_aupr,
            "base_aupr_out": 1.0 - base_aupr,
            "n_in": self.report.n_positive,
            "n_out": self.report.n_negative,
            "mean_score_in": self.report.mean_score_positive,
            "mean_score_out": self.report.mean_score_negative,
            "ranksum_p": self.report.ranksum_p,
            "mean_pred_prob": self.mean_pred_prob,
            "test_error": self.test_error,
            "pooled": self.pooled,
        }


@dataclasses.dataclass
class ReportDocument:
    rows: list
    provenance: dict
    summary: dict = dataclasses.field(default_factory=dict)

    def to_dict(self, with_timestamp: bool = True) -> dict:
        prov = dict(self.provenance)
        if not with_timestamp:
            prov.pop("created_at", None)
        return {
            "format": REPORT_FORMAT,
            "rows": [r.to_dict() for r in self.rows],
            "summary": self.summary,
            "provenance": prov,
        }


def to_canonical_json(doc: ReportDocument) -> str:
    """Deterministic full-precision JSON, timestamp excluded."""
    return json.dumps(doc.to_dict(with_timestamp=False), sort_keys=True)


def _provenance(config: ExperimentConfig) -> dict:
    from . import __version__

    return {
        "config_sha256": config.sha256(),
        "seed": config.seed,
        "version": __version__,
        "backend": backend_name(),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


# ---------------------------------------------------------------------------
# data plumbing


def _load_or_generate(config: ExperimentConfig, split: str) -> D.Dataset:
    images = getattr(config, f"{split}_images")
    labels = getattr(config, f"{split}_labels")
    if (images is None) != (labels is None):
        raise ConfigError(f"{split}_images and {split}_labels must be given together")
    if images is not None:
        try:
            return D.load_idx(images, labels)
        except D.IdxError as exc:
            raise DataError(str(exc)) from exc
    n = config.train_size if split == "train" else config.test_size
    tag = _TAG_TRAIN_DATA if split == "train" else _TAG_TEST_DATA
    return D.gen_synthetic_digits(n, seed=_derive_seed(config, tag), split=split)


def _train_model(config: ExperimentConfig, train_data: D.Dataset, with_decoder: bool):
    if config.checkpoint_in is not None:
        return nn.load_checkpoint(config.checkpoint_in)
    weights = {"classification": 1.0,
               "reconstruction": config.reconstruction_weight if with_decoder else 0.0}
    train_cfg = nn.TrainConfig(
        epochs=config.epochs,
        seed=_derive_seed(config, _TAG_MODEL),
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        loss_weights=weights,
        hidden_widths=config.hidden_widths,
    )
    model, _ = nn.train_classifier(train_cfg, train_data)
    return model


def _model_scores(model: nn.Mlp, inputs: np.ndarray, kind: ScoreKind) -> np.ndarray:
    probs, _ = nn.predict(model, inputs)
    return detector_scores(probs, kind)


# ---------------------------------------------------------------------------
# experiment runners


def run_error_detection(config: ExperimentConfig) -> ReportDocument:
    """Success-vs-error detection on the test split, one report row."""
    train_data = _load_or_generate(config, "train")
    test_data = _load_or_generate(config, "test")
    model = _train_model(config, train_data, with_decoder=False)

    error_rate, probs = nn.evaluate(model, test_data)
    kind = ScoreKind(config.score_kind)
    scores = detector_scores(probs, kind)
    succ, errs = partition_by_correctness(probs.argmax(axis=1), test_data.labels, scores)
    if succ.size < 2:
        raise DataError("degenerate populations: nearly all test predictions are wrong")
    if errs.size < 2:
        raise DataError("degenerate populations: nearly all test predictions are correct")

    max_probs = detector_scores(probs, ScoreKind.MAX_PROB)
    _, wrong_mp = partition_by_correctness(probs.argmax(axis=1), test_data.labels, max_probs)
    row = ReportRow(
        name="success-vs-error",
        detector=kind.value,
        report=build_report(succ, errs),
        mean_pred_prob=float(wrong_mp.mean()),
        test_error=error_rate,
    )
    return ReportDocument(rows=[row], provenance=_provenance(config))


def _ood_negative_sets(config: ExperimentConfig, test_data: D.Dataset, holdout_ood):
    """Name -> unlabeled input matrix for every model-scored OOD source."""
    d = test_data.inputs.shape[1]
    sets = {}
    for i, source in enumerate(config.ood_sources):
        seed = _derive_seed(config, _TAG_OOD, i)
        if source == "gaussian":
            sets[source] = D.gen_gaussian_images(config.ood_size, d, seed).inputs
        elif source == "uniform":
            sets[source] = D.gen_uniform_images(config.ood_size, d, seed).inputs
        elif source == "class-holdout":
            if holdout_ood is None or len(holdout_ood) == 0:
                raise DataError("class-holdout source has no held-out examples")
            sets[source] = holdout_ood.inputs
        elif source == "distorted":
            rng = np.random.default_rng(_derive_seed(config, _TAG_DISTORT))
            take = rng.choice(len(test_data), size=min(config.ood_size, len(test_data)),
                              replace=False)
            side = int(round(d**0.5))
            out = np.empty((take.size, d))
            for j, t in enumerate(take):
                entry = ab.DEFAULT_IMAGE_DISTORTIONS[
                    int(rng.integers(len(ab.DEFAULT_IMAGE_DISTORTIONS)))
                ]
                kind = entry.sample(rng)
                out[j] = D.distort(test_data.inputs[t], kind, shape=(side, side),
                                   seed=int(rng.integers(0, 2**63 - 1)))
            sets[source] = out
    return sets


def run_ood_detection(config: ExperimentConfig) -> ReportDocument:
    """In-distribution test examples vs every configured OOD source.

    When "class-holdout" is among the sources, the model is trained only
    on the kept classes and every row is evaluated against the kept
    in-distribution test examples, so all sources share one model and
    one positive population and the pooled "All" row stays coherent.
    An external-jsonl source that carries its own "in" group forms a
    self-contained row and is excluded from pooling.
    """
    if not config.ood_sources:
        raise ConfigError("ood-detection needs at least one ood source")
    train_data = _load_or_generate(config, "train")
    test_data = _load_or_generate(config, "test")

    holdout_ood = None
    if "class-holdout" in config.ood_sources:
        train_data, _ = D.class_holdout_split(train_data, config.held_out_classes)
        test_data, holdout_ood = D.class_holdout_split(test_data, config.held_out_classes)

    model = _train_model(config, train_data, with_decoder=False)
    kind = ScoreKind(config.score_kind)
    _, test_probs = nn.evaluate(model, test_data)
    in_scores = detector_scores(test_probs, kind)
    in_max_probs = detector_scores(test_probs, ScoreKind.MAX_PROB)

    rows = []
    pooled_out = []
    negative_sets = _ood_negative_sets(config, test_data, holdout_ood)
    for source in config.ood_sources:
        if source == "external-jsonl":
            ext_in, ext_out = ingest_external_scores(config.external_scores, kind)
            if ext_out.size == 0:
                raise DataError("external scores contain no out-of-distribution records")
            if ext_in.size:
                rows.append(ReportRow(
                    name=source, detector=kind.value,
                    report=build_report(ext_in, ext_out), pooled=False,
                ))
            else:
                rows.append(ReportRow(
                    name=source, detector=kind.value,
                    report=build_report(in_scores, ext_out),
                ))
                pooled_out.append(ext_out)
            continue
        neg_inputs = negative_sets[source]
        neg_probs, _ = nn.predict(model, neg_inputs)
        neg_scores = detector_scores(neg_probs, kind)
        neg_max_probs = detector_scores(neg_probs, ScoreKind.MAX_PROB)
        rows.append(ReportRow(
            name=source, detector=kind.value,
            report=build_report(in_scores, neg_scores),
            mean_pred_prob=float(neg_max_probs.mean()),
        ))
        pooled_out.append(neg_scores)

    if len(pooled_out) > 1:
        rows.append(ReportRow(
            name="All", detector=kind.value,
            report=build_report(in_scores, np.concatenate(pooled_out)),
        ))
    summary = {"in_dist_mean_max_prob": float(in_max_probs.mean())}
    return ReportDocument(rows=rows, provenance=_provenance(config), summary=summary)


def run_abmod(config: ExperimentConfig) -> ReportDocument:
    """Softmax baseline vs learned normality scorer on identical OOD sets.

    The backbone (classifier + decoder, joint loss) trains on the kept
    classes; the scorer trains on clean vs distorted training images
    (blur / rotation / Gaussian noise families). The held-out classes
    always contribute a source, on top of whatever the config asks for.
    Rows come in pairs, one per detector per source; the summary block
    carries the per-detector averages over the model-scored sources plus
    a row for the uniform additive-noise distortion family the scorer
    never saw in training.
    """
    train_data = _load_or_generate(config, "train")
    test_data = _load_or_generate(config, "test")
    train_data, _ = D.class_holdout_split(train_data, config.held_out_classes)
    test_data, holdout_ood = D.class_holdout_split(test_data, config.held_out_classes)

    model = _train_model(config, train_data, with_decoder=True)
    if not model.has_decoder:
        raise ConfigError("abmod needs a decoder head (reconstruction_weight > 0)")
    module = ab.build_module(model, seed=_derive_seed(config, _TAG_SCORER, 1))
    binary = ab.make_abnormal_set(
        train_data, ab.DEFAULT_IMAGE_DISTORTIONS,
        seed=_derive_seed(config, _TAG_SCORER, 2),
    )
    ab.train_scorer(
        module, binary,
        epochs=config.scorer_epochs,
        seed=_derive_seed(config, _TAG_SCORER, 3),
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
    )

    kind = ScoreKind(config.score_kind)
    softmax_in = _model_scores(model, test_data.inputs, kind)
    abmod_in = ab.normality_score(module, test_data.inputs)

    sources = dict(_ood_negative_sets(config, test_data, holdout_ood))
    if "class-holdout" not in sources:
        if len(holdout_ood) == 0:
            raise DataError("class-holdout source has no held-out examples")
        sources["class-holdout"] = holdout_ood.inputs
    # the distortion family the scorer never trained on
    rng = np.random.default_rng(_derive_seed(config, _TAG_DISTORT, 99))
    side = int(round(test_data.inputs.shape[1] ** 0.5))
    unseen = np.empty_like(test_data.inputs)
    for j in range(len(test_data)):
        unseen[j] = D.distort(
            test_data.inputs[j], D.UniformNoise(amplitude=float(rng.uniform(0.3, 0.7))),
            shape=(side, side), seed=int(rng.integers(0, 2**63 - 1)),
        )
    sources["unseen-uniform-distortion"] = unseen

    rows = []
    averages = {"softmax": [], "abmod": []}
    for name, neg_inputs in sources.items():
        softmax_out = _model_scores(model, neg_inputs, kind)
        abmod_out = ab.normality_score(module, neg_inputs)
        neg_mp = _model_scores(model, neg_inputs, ScoreKind.MAX_PROB)
        rows.append(ReportRow(
            name=name, detector=kind.value,
            report=build_report(softmax_in, softmax_out),
            mean_pred_prob=float(neg_mp.mean()),
        ))
        rows.append(ReportRow(
            name=name, detector="abmod",
            report=build_report(abmod_in, abmod_out),
        ))
        if name != "unseen-uniform-distortion":
            averages["softmax"].append(rows[-2].report.auroc)
            averages["abmod"].append(rows[-1].report.auroc)

    summary = {
        "softmax_average_auroc": float(np.mean(averages["softmax"])),
        "abmod_average_auroc": float(np.mean(averages["abmod"])),
        "averaged_sources": [n for n in sources if n != "unseen-uniform-distortion"],
        "backbone_checksum": module.backbone_checksum,
    }
    return ReportDocument(rows=rows, provenance=_provenance(config), summary=summary)


# ---------------------------------------------------------------------------
# external score ingestion


def _record_score(obj: dict, kind: ScoreKind, lineno: int) -> float:
    has_logits = "logits" in obj
    has_score = "score" in obj
    if has_logits == has_score:
        raise DataError(f"line {lineno}: record needs exactly one of logits/score")
    if has_score:
        value = obj["score"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DataError(f"line {lineno}: score is not numeric")
        return float(value)
    logits = obj["logits"]
    if not isinstance(logits, list) or len(logits) < 2 or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in logits
    ):
        raise DataError(f"line {lineno}: logits must be a list of >= 2 numbers")
    label = obj.get("label")
    if label is not None and not isinstance(label, int):
        raise DataError(f"line {lineno}: label must be an integer or null")
    from .scores import softmax as _softmax

    return float(detector_scores(_softmax(np.array(logits, dtype=np.float64)), kind)[0])


def ingest_external_scores(path, kind: ScoreKind = ScoreKind.MAX_PROB):
    """Read line-delimited JSON score records; returns (in_scores, out_scores).

    Every line is one JSON object, either {"logits": [...], "label":
    int|null, "group": "in"|"out"} or {"score": number, "group": ...};
    records may equivalently say {"label": "pos"|"neg"} instead of a
    group. All lines must use the same shape (logits vs score, group vs
    pos/neg labels); the first malformed line aborts with its number.
    """
    groups: dict = {"in": [], "out": []}
    shape_seen = None
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"cannot read scores: {exc}") from exc
    with fh:
        lineno = 0
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"line {lineno}: record must be a JSON object")

            if "group" in obj:
                tag, key = obj["group"], "group"
                mapping = {"in": "in", "out": "out"}
            elif isinstance(obj.get("label"), str):
                tag, key = obj["label"], "pos/neg label"
                mapping = {"pos": "in", "neg": "out"}
            else:
                raise DataError(f"line {lineno}: record is missing its group")
            if tag not in mapping:
                raise DataError(f"line {lineno}: bad {key} value {tag!r}")

            shape = ("logits" if "logits" in obj else "score", key)
            if shape_seen is None:
                shape_seen = shape
            elif shape != shape_seen:
                raise DataError(
                    f"line {lineno}: mixed record shapes "
                    f"({shape[0]}/{shape[1]} after {shape_seen[0]}/{shape_seen[1]})"
                )
            groups[mapping[tag]].append(_record_score(obj, kind, lineno))
        if lineno == 0 or shape_seen is None:
            raise DataError("score file has no records")
    return np.array(groups["in"]), np.array(groups["out"])


# ---------------------------------------------------------------------------
# emission


def _percent_cell(value: float) -> str:
    pct = Decimal(repr(value * 100.0))
    if pct < Decimal("9.95"):
        return str(pct.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))
    return str(pct.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def _markdown_table(doc: ReportDocument) -> str:
    headers = ["Source", "Detector", "AUROC/Base", "AUPR In/Base", "AUPR Out/Base",
               "Pred. Prob (mean)", "Test Error"]
    lines = ["| " + " | ".join(headers) + " |",
             "| " + " | ".join("---" for _ in headers) + " |"]
    for row in doc.rows:
        d = row.to_dict()
        cells = [
            row.name,
            row.detector,
            f"{_percent_cell(d['auroc'])}/{_percent_cell(d['base_auroc'])}",
            f"{_percent_cell(d['aupr_in'])}/{_percent_cell(d['base_aupr_in'])}",
            f"{_percent_cell(d['aupr_out'])}/{_percent_cell(d['base_aupr_out'])}",
            _percent_cell(row.mean_pred_prob) if row.mean_pred_prob is not None else "-",
            _percent_cell(row.test_error) if row.test_error is not None else "-",
        ]
        lines.append("| " + " | ".join(cells) + " |")
    if doc.summary:
        lines.append("")
        for key in sorted(doc.summary):
            lines.append(f"- {key}: {doc.summary[key]}")
    return "\n".join(lines) + "\n"


_CSV_COLUMNS = ["name", "detector", "auroc", "aupr_in", "aupr_out", "base_auroc",
                "base_aupr_in", "base_aupr_out", "n_in", "n_out", "mean_score_in",
                "mean_score_out", "ranksum_p", "mean_pred_prob", "test_error", "pooled"]


def _csv_text(doc: ReportDocument) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in doc.rows:
        writer.writerow({k: row.to_dict()[k] for k in _CSV_COLUMNS})
    return buf.getvalue()


def emit_report(doc: ReportDocument, path_base, formats=("json", "markdown", "csv")):
    """Write the document in the requested formats; returns the paths.

    JSON is canonical (sorted keys, full precision, includes the
    creation timestamp); markdown renders compact value/Base percent
    cells; CSV holds one row per population pair.
    """
    suffix = {"json": ".json", "markdown": ".md", "csv": ".csv"}
    paths = []
    for fmt in formats:
        if fmt not in suffix:
            raise ConfigError(f"unknown report format {fmt!r}")
        path = str(path_base) + suffix[fmt]
        if fmt == "json":
            text = json.dumps(doc.to_dict(with_timestamp=True), sort_keys=True, indent=2)
        elif fmt == "markdown":
            text = _markdown_table(doc)
        else:
            text = _csv_text(doc)
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write report: {exc}") from exc
        paths.append(path)
    return paths
