"""Export a colored segmentation, the attention map as JSON and a heat plot, and word attention.

Usage:
    partlisten-visualize --run runs/default --shape-id chair_0004 [--utterance "a chair with arms"]
"""

import argparse
import sys
from pathlib import Path

import structlog

from ..evaluation.evaluator import Evaluator
from ..evaluation.export import (
    attention_record,
    export_segmentation_ply,
    export_word_attention,
    write_json,
)
from ..training.batching import ShapeStore
from ..training.data import load_shapes
from ..training.runs import load_checkpoint
from ..view.plots import plot_attention
from .common import run_command

logger = structlog.get_logger()


def build_parser():
    parser = argparse.ArgumentParser(description="Visualize a trained listener on one shape")
    parser.add_argument("--run", required=True, help="Run directory or checkpoint file")
    parser.add_argument("--shape-id", required=True)
    parser.add_argument("--utterance", help="Utterance whose word attention is exported")
    parser.add_argument("--bundle", help="Bundle holding the shape; defaults to the run's")
    parser.add_argument("--out", help="Output directory, defaults to <run>/visualize")
    return parser


def visualize(args):
    model, config, vocabulary = load_checkpoint(args.run)
    shapes = load_shapes(config, args.bundle, shape_ids=[args.shape_id])
    store = ShapeStore(shapes, config.train.input_mode)
    shape = store[args.shape_id]

    run = Path(args.run)
    out = Path(args.out) if args.out else (run if run.is_dir() else run.parent) / "visualize"
    out.mkdir(parents=True, exist_ok=True)

    evaluator = Evaluator(model, store, vocabulary, max_length=config.train.max_utterance_length)
    attention = evaluator.attention([shape.id])[0]
    segmentation = evaluator.segmentations([shape])[0]
    segments = store.segments_for(shape.id)

    written = [
        export_segmentation_ply(
            out / f"{shape.id}.ply", shape, segmentation.point_parts, model.num_parts
        ),
        plot_attention(
            shape.cloud.points,
            attention[segments.assignment],
            model.part_names,
            out / f"{shape.id}_attention.png",
            title=shape.id,
        ),
        write_json(
            out / f"{shape.id}_attention.json", attention_record([shape.id], [attention])
        ),
    ]

    if args.utterance:
        record = export_word_attention(
            model, vocabulary, args.utterance, max_length=config.train.max_utterance_length
        )
        written.append(write_json(out / f"{shape.id}_words.json", record))

    logger.info("visualization_written", shape_id=shape.id, files=[str(p) for p in written])
    for path in written:
        print(path)


def main(argv=None):
    return run_command(visualize, build_parser().parse_args(argv))


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
