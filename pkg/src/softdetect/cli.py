"""Command-line entry point.

Subcommands: train, err-detect, ood-detect, abmod, ingest. Every
subcommand takes --config (JSON), --seed and --out; flags override
config keys. Exit codes: 0 success, 1 usage or configuration problem,
2 data problem (bad files, malformed records, degenerate populations).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import nn
from .data import IdxError
from .harness import (
    ConfigError,
    DataError,
    ExperimentConfig,
    ReportDocument,
    ReportRow,
    _provenance,
    emit_report,
    ingest_external_scores,
    run_abmod,
    run_error_detection,
    run_ood_detection,
)
from .metrics import build_report
from .scores import ScoreKind

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this project reserves 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="softdetect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output path base (reports) or file (train)")

    p_train = sub.add_parser("train", help="train a classifier and save a checkpoint")
    common(p_train)

    for name, blurb in (
        ("err-detect", "success-vs-error detection report"),
        ("ood-detect", "out-of-distribution detection report"),
        ("abmod", "softmax baseline vs learned normality scorer"),
    ):
        common(sub.add_parser(name, help=blurb))

    p_ing = sub.add_parser("ingest", help="evaluate externally produced scores")
    common(p_ing)
    p_ing.add_argument("--scores", help="JSONL score records (overrides config)")
    p_ing.add_argument("--score-kind", default=None,
                       choices=[k.value for k in ScoreKind],
                       help="scoring rule for logits records")
    return parser


_COMMAND_TASK = {
    "train": "error-detection",
    "err-detect": "error-detection",
    "ood-detect": "ood-detection",
    "abmod": "abmod",
    "ingest": "error-detection",
}


def _load_config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "out": args.out}
    if args.config:
        cfg = ExperimentConfig.from_json(args.config, overrides)
    else:
        if args.seed is None:
            raise ConfigError("--seed is required when no config file is given")
        cfg = ExperimentConfig.from_dict(
            {"task": _COMMAND_TASK[args.command], "seed": args.seed}, overrides
        )
    expected = _COMMAND_TASK[args.command]
    if args.command not in ("train", "ingest") and cfg.task != expected:
        raise ConfigError(f"config task {cfg.task!r} does not match command {expected!r}")
    return cfg


def _cmd_train(cfg: ExperimentConfig) -> int:
    from .harness import _load_or_generate, _derive_seed, _TAG_MODEL

    train_data = _load_or_generate(cfg, "train")
    with_decoder = cfg.reconstruction_weight > 0 and cfg.task == "abmod"
    weights = {"classification": 1.0,
               "reconstruction": cfg.reconstruction_weight if with_decoder else 0.0}
    train_cfg = nn.TrainConfig(
        epochs=cfg.epochs,
        seed=_derive_seed(cfg, _TAG_MODEL),
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        loss_weights=weights,
        hidden_widths=cfg.hidden_widths,
    )
    model, log = nn.train_classifier(train_cfg, train_data)
    for entry in log:
        print(json.dumps(entry))
    if cfg.out:
        nn.save_checkpoint(model, cfg.out)
        print(f"checkpoint written to {cfg.out}")
    return 0


def _cmd_ingest(cfg: ExperimentConfig, args) -> int:
    path = args.scores or cfg.external_scores
    if not path:
        raise ConfigError("ingest needs --scores or external_scores in the config")
    kind = ScoreKind(args.score_kind) if args.score_kind else ScoreKind(cfg.score_kind)
    in_scores, out_scores = ingest_external_scores(path, kind)
    if in_scores.size < 2 or out_scores.size < 2:
        raise DataError("need >= 2 records in each group to build a report")
    row = ReportRow(name="external", detector=kind.value,
                    report=build_report(in_scores, out_scores))
    doc = ReportDocument(rows=[row], provenance=_provenance(cfg))
    _finish(doc, cfg)
    return 0


def _finish(doc: ReportDocument, cfg: ExperimentConfig):
    if cfg.out:
        for path in emit_report(doc, cfg.out):
            print(f"wrote {path}")
    else:
        print(json.dumps(doc.to_dict(with_timestamp=True), sort_keys=True, indent=2))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "train":
            return _cmd_train(cfg)
        if args.command == "ingest":
            return _cmd_ingest(cfg, args)
        runner = {
            "err-detect": run_error_detection,
            "ood-detect": run_ood_detection,
            "abmod": run_abmod,
        }[args.command]
        doc = runner(cfg)
        _finish(doc, cfg)
        return 0
    except ConfigError as exc:
        print(f"softdetect: config error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DataError, IdxError) as exc:
        print(f"softdetect: data error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
