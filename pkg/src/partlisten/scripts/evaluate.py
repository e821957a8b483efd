"""Evaluate a trained listener on one split.

Usage:
    partlisten-eval --run runs/default --split test [--baseline uniform --baseline random]
        [--ood-bundle data/tables/bundle]

Writes report.json, report.txt and part_miou.png to <run>/eval-<split> unless --out
says otherwise. --export-attention adds attention.json.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

import structlog

from ..config import BASELINES, IOU_AVERAGE_SETS, MODES
from ..errors import InvalidConfigError
from ..evaluation.baselines import RandomGuesser
from ..evaluation.evaluator import Evaluator, classification_accuracy, labeled_shapes
from ..evaluation.export import attention_record, write_json
from ..language.rounds import SPLITS
from ..training.batching import RAW_POINTS, ShapeStore
from ..training.data import load_experiment_data, load_shapes, mean_segment_count
from ..training.runs import load_checkpoint
from ..training.trainer import rounds_with_part
from ..view.plots import plot_part_miou
from ..view.reports import cross_part_record, result_row, text_report, write_report
from .common import run_command

logger = structlog.get_logger()

NO_BASELINE = "none"
PART_MIOU_PLOT = "part_miou.png"
ATTENTION_FILE = "attention.json"


def build_parser():
    parser = argparse.ArgumentParser(description="Evaluate a trained listener")
    parser.add_argument("--run", required=True, help="Run directory or checkpoint file")
    parser.add_argument("--split", default="test", choices=SPLITS)
    parser.add_argument("--mode", choices=MODES, help="Must match the trained listener")
    parser.add_argument(
        "--baseline",
        action="append",
        choices=BASELINES,
        help="Also report accuracy with uniform or random attention; repeatable",
    )
    parser.add_argument("--ood-bundle", help="Bundle of another category for cross-part mIoU")
    parser.add_argument("--iou-average-set", choices=IOU_AVERAGE_SETS)
    parser.add_argument("--seed", type=int, help="Seed of the random baselines")
    parser.add_argument(
        "--export-attention",
        action="store_true",
        help="Also write attention.json with the attention map of every split shape",
    )
    parser.add_argument("--out", help="Report directory")
    return parser


def resolve_eval_config(config, args):
    overrides = {
        "mode": args.mode,
        "iou_average_set": args.iou_average_set,
        "seed": args.seed,
        "baseline": args.baseline[-1] if args.baseline else None,
    }
    return dataclasses.replace(
        config.eval, **{key: value for key, value in overrides.items() if value is not None}
    )


def make_evaluator(model, shapes, vocabulary, config, eval_config):
    return Evaluator(
        model,
        ShapeStore(shapes, config.train.input_mode),
        vocabulary,
        batch_size=config.train.batch_size,
        iou_average_set=eval_config.iou_average_set,
        max_length=config.train.max_utterance_length,
    )


def default_report_dir(run, split):
    run = Path(run)
    run_dir = run if run.is_dir() else run.parent
    return run_dir / f"eval-{split}"


def result_rows(evaluator, rounds, shapes, baselines, seed):
    """Model, point projection, attention baselines, chance and upper bound rows."""
    segmentation = evaluator.segmentation_report(shapes) if shapes else None
    accuracy = classification_accuracy(evaluator, rounds)
    rows = [result_row(evaluator.model.mode, segmentation, accuracy)]

    if evaluator.store.input_mode == RAW_POINTS and shapes:
        rows.append(result_row("point_projection", evaluator.point_projection_report(shapes)))

    for baseline in baselines:
        listener = evaluator.baseline(baseline, seed)
        rows.append(
            result_row(f"{baseline}_attention", accuracy=classification_accuracy(listener, rounds))
        )

    rows.append(
        result_row("random_guess", accuracy=classification_accuracy(RandomGuesser(seed), rounds))
    )
    if shapes:
        rows.append(result_row("upper_bound", evaluator.upper_bound_report(shapes)))

    return rows


def evaluate(args):
    model, config, vocabulary = load_checkpoint(args.run)
    eval_config = resolve_eval_config(config, args)
    mode = eval_config.mode or model.mode
    if mode != model.mode:
        raise InvalidConfigError(f"A {model.mode} listener cannot be evaluated in {mode} mode")

    data = load_experiment_data(config, vocabulary)
    evaluator = make_evaluator(model, data.shapes, vocabulary, config, eval_config)
    structlog.contextvars.bind_contextvars(split=args.split, mode=mode)

    rounds = data.splits[args.split]
    if model.is_part_aware:
        rounds = rounds_with_part(rounds)
    shapes = labeled_shapes(data.shapes_in(args.split))
    baselines = sorted({b for b in (args.baseline or [eval_config.baseline]) if b != NO_BASELINE})

    report = {
        "run": str(args.run),
        "split": args.split,
        "mode": mode,
        "input_mode": config.train.input_mode,
        "category": data.category,
        "iou_average_set": eval_config.iou_average_set,
        "mean_segments": mean_segment_count(data.shapes),
        "num_rounds": len(rounds),
        "part_names": list(model.part_names),
        "results": result_rows(evaluator, rounds, shapes, baselines, eval_config.seed),
    }

    if shapes:
        matrix, gt_names = evaluator.cross_part(shapes)
        report["cross_part"] = cross_part_record(matrix, model.part_names, gt_names)

    if args.ood_bundle:
        ood_shapes = labeled_shapes(load_shapes(config, args.ood_bundle))
        ood = make_evaluator(model, ood_shapes, vocabulary, config, eval_config)
        matrix, gt_names = ood.cross_part(ood_shapes)
        report["ood_cross_part"] = cross_part_record(
            matrix, model.part_names, gt_names, eval_config.ood_part_map
        )

    out = Path(args.out) if args.out else default_report_dir(args.run, args.split)

    write_report(out, report)
    if args.export_attention:
        split_ids = [shape.id for shape in data.shapes_in(args.split)]
        record = attention_record(split_ids, evaluator.attention(split_ids))
        write_json(out / ATTENTION_FILE, record)
    if shapes:
        plot_part_miou(report["results"], model.part_names, out / PART_MIOU_PLOT)

    print(text_report(report))


def main(argv=None):
    return run_command(evaluate, build_parser().parse_args(argv))


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
