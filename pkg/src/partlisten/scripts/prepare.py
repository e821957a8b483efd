"""Validate a bundle and its raw rounds, preprocess utterances and write the splits.

Usage:
    partlisten-prepare --bundle data/bundle --rounds data/rounds.jsonl --out data/prepared
"""

import argparse
import collections
import sys

import polars as pl
import structlog

from ..config import resolve_data_path
from ..errors import InvalidInputError
from ..geometry.bundle import read_bundle
from ..language.parts import DEFAULT_PART_NAMES, PartNameSet
from ..language.preprocessing import TextMaps
from ..language.rounds import DEFAULT_RATIOS, SPLITS, prepare_round, read_rounds, split_rounds
from ..training.data import check_rounds, write_splits
from ..view.reports import format_table
from .common import parse_ratios, run_command

logger = structlog.get_logger()

NO_PART = "(none)"


def build_parser():
    parser = argparse.ArgumentParser(description="Prepare reference-game splits")
    parser.add_argument("--bundle", required=True, help="Shape bundle directory")
    parser.add_argument("--rounds", required=True, help="Raw rounds, JSON lines")
    parser.add_argument("--out", required=True, help="Output directory for the splits")
    parser.add_argument("--lexicon", help="Term to part name TSV")
    parser.add_argument("--typos", help="Typo map TSV")
    parser.add_argument("--plurals", help="Plural map TSV")
    parser.add_argument("--compounds", help="Compound word map TSV")
    parser.add_argument("--parts", help="Comma separated part names for unlabelled bundles")
    parser.add_argument("--category", help="Shape category, defaults to the bundle's")
    parser.add_argument(
        "--ratios", type=parse_ratios, default=DEFAULT_RATIOS, help="train,val,test shares"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--shape-disjoint",
        action="store_true",
        help="Keep every shape in a single split, dropping rounds that straddle splits",
    )
    parser.add_argument(
        "--require-gt", action="store_true", help="Fail unless the bundle carries part labels"
    )
    return parser


def part_counts(splits, part_names):
    """Rounds per mentioned part (rows) and split (columns)."""
    order = [*part_names.names, NO_PART]
    columns = {"part": order}

    for split in SPLITS:
        counts = collections.Counter(
            NO_PART if r.mentioned_part is None else part_names.names[r.mentioned_part]
            for r in splits[split]
        )
        columns[split] = [counts[part] for part in order]

    return pl.DataFrame(columns)


def prepare(args):
    bundle = read_bundle(resolve_data_path(args.bundle))
    if args.require_gt and not bundle.has_labels:
        raise InvalidInputError(f"Bundle {args.bundle} has no part labels")
    if not bundle.shapes:
        raise InvalidInputError(f"Bundle {args.bundle} holds no shapes")

    names = bundle.part_names or (args.parts.split(",") if args.parts else DEFAULT_PART_NAMES)
    part_names = PartNameSet.from_names(names, args.lexicon)
    maps = TextMaps.load(args.typos, args.compounds, args.plurals)
    category = args.category or bundle.shapes[0].category

    raw = read_rounds(resolve_data_path(args.rounds))
    check_rounds({"input": raw}, {shape.id for shape in bundle.shapes})
    rounds = [prepare_round(r, maps, part_names) for r in raw]

    splits = dict(
        zip(SPLITS, split_rounds(rounds, args.ratios, args.seed, args.shape_disjoint), strict=True)
    )
    write_splits(
        args.out,
        splits,
        part_names,
        category,
        seed=args.seed,
        ratios=list(args.ratios),
        shape_disjoint=args.shape_disjoint,
    )

    without_part = sum(r.mentioned_part is None for r in rounds)
    logger.info("splits_prepared", out=str(args.out), rounds=len(rounds), no_part=without_part)

    print("split sizes: " + " / ".join(f"{s} {len(splits[s])}" for s in SPLITS))
    print(format_table(part_counts(splits, part_names)))


def main(argv=None):
    return run_command(prepare, build_parser().parse_args(argv))


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
