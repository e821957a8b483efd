"""Generate a synthetic shape bundle and template reference games.

Usage:
    partlisten-synth --parts chair --shapes 300 --rounds 3000 --out data/synthetic
"""

import argparse
import sys
from pathlib import Path

import structlog

from ..geometry.bundle import write_bundle
from ..geometry.synthetic import PartCatalog, generate_synthetic_shapes
from ..language.parts import PartNameSet
from ..language.rounds import write_rounds
from ..language.synthetic import synthesize_reference_games
from .common import run_command

logger = structlog.get_logger()

BUNDLE_DIR = "bundle"
ROUNDS_FILE = "rounds.jsonl"


def build_parser():
    parser = argparse.ArgumentParser(description="Generate synthetic shapes and games")
    parser.add_argument(
        "--parts", default="chair", help="Shipped catalog name (chair, table) or catalog JSON"
    )
    parser.add_argument("--shapes", type=int, default=300, help="Number of shapes")
    parser.add_argument("--rounds", type=int, default=3000, help="Number of game rounds")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output directory")
    parser.add_argument(
        "--min-rate",
        type=float,
        default=0.1,
        help="Parts and attributes rarer than this (or commoner than 1 - this) are not used",
    )
    return parser


def synthesize(args):
    catalog = PartCatalog.load(args.parts)
    shapes = generate_synthetic_shapes(catalog, args.shapes, args.seed)
    out = Path(args.out)

    write_bundle(out / BUNDLE_DIR, shapes, catalog.part_names)
    rounds = []
    if args.rounds:
        rounds = synthesize_reference_games(
            shapes, count=args.rounds, seed=args.seed, min_rate=args.min_rate
        )
    write_rounds(out / ROUNDS_FILE, rounds, PartNameSet(catalog.part_names))

    logger.info(
        "synthetic_data_written",
        out=str(out),
        category=catalog.category,
        shapes=len(shapes),
        rounds=len(rounds),
    )
    print(f"{len(shapes)} shapes and {len(rounds)} rounds written to {out}")


def main(argv=None):
    return run_command(synthesize, build_parser().parse_args(argv))


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
