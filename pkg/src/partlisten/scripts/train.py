"""Train a listener.

Usage:
    partlisten-train --config conf/experiment.json [--ablate no_ce_reg ...]

The run directory receives config.json (the exact resolved config), vocabulary.json,
train.log, metrics.jsonl, per-epoch checkpoints, model.ckpt and curves.png.
"""

import argparse
import dataclasses
import sys

import structlog

from ..config import ABLATIONS, ExperimentConfig
from ..logging import configure_logging
from ..training.data import load_experiment_data, mean_segment_count
from ..training.runs import RunDirectory
from ..training.trainer import Trainer
from ..view.plots import plot_training_curves
from .common import run_command

logger = structlog.get_logger()

CURVES_FILE = "curves.png"


def build_parser():
    parser = argparse.ArgumentParser(description="Train a part-segmenting listener")
    parser.add_argument("--config", help="Experiment config JSON; defaults apply without one")
    parser.add_argument(
        "--ablate",
        action="append",
        default=[],
        choices=sorted(ABLATIONS),
        help="Flip one switch of the config; repeatable",
    )
    parser.add_argument("--run-name", help="Overrides the config's run name")
    parser.add_argument("--seed", type=int, help="Overrides the training seed")
    parser.add_argument("--output-dir", help="Overrides the config's output directory")
    return parser


def resolve_config(args):
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    for name in args.ablate:
        config = config.ablate(name)

    if args.seed is not None:
        train_config = dataclasses.replace(config.train, seed=args.seed)
        config = dataclasses.replace(config, train=train_config)
    if args.run_name:
        config = dataclasses.replace(config, run_name=args.run_name)
    if args.output_dir:
        config = dataclasses.replace(config, output_dir=args.output_dir)

    return config


def train(args):
    config = resolve_config(args)
    data = load_experiment_data(config)

    run = RunDirectory.create(config.output_dir, config.run_name)
    configure_logging(log_file=run.log_path)
    structlog.contextvars.bind_contextvars(
        run=run.path.name, seed=config.train.seed, mode=config.train.mode
    )

    config.save(run.config_path)
    data.vocabulary.save(run.vocabulary_path)
    logger.info(
        "run_started",
        path=str(run.path),
        ablations=args.ablate,
        mean_segments=mean_segment_count(data.shapes),
    )

    result = Trainer(config, data, run).train()
    plot_training_curves(run.read_metrics(), run.path / CURVES_FILE)

    last = result.history[-1]
    print(f"run {run.path}: val accuracy {last['val_accuracy']}, val mIoU {last['val_miou']}")


def main(argv=None):
    return run_command(train, build_parser().parse_args(argv))


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
