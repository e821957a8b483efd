"""Prepared experiment data: a shape bundle plus a directory of split rounds.

The split directory holds ``train.jsonl``, ``val.jsonl``, ``test.jsonl`` and a
``manifest.json`` with the part names and category.
"""

import json
from pathlib import Path
from typing import NamedTuple

import numpy as np
import structlog

from ..config import resolve_data_path
from ..errors import InvalidInputError
from ..geometry.bundle import read_bundle
from ..geometry.granularity import split_by_granularity
from ..language.parts import PartNameSet
from ..language.rounds import SPLITS, read_rounds, write_rounds
from ..language.vocabulary import Vocabulary

logger = structlog.get_logger()

SPLIT_MANIFEST = "manifest.json"


class ExperimentData(NamedTuple):
    shapes: list
    part_names: PartNameSet
    splits: dict
    vocabulary: Vocabulary
    category: str

    def shapes_in(self, split):
        """Shapes referenced by the rounds of a split, in first-seen order."""
        by_id = {shape.id: shape for shape in self.shapes}
        seen = dict.fromkeys(i for r in self.splits[split] for i in r.shape_ids)
        return [by_id[shape_id] for shape_id in seen]


def split_file(directory, split):
    return Path(directory) / f"{split}.jsonl"


def write_splits(directory, splits, part_names, category, **extra):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    for split in SPLITS:
        write_rounds(split_file(directory, split), splits[split], part_names)

    manifest = {
        "part_names": list(part_names.names),
        "category": category,
        "counts": {split: len(splits[split]) for split in SPLITS},
        **extra,
    }
    (directory / SPLIT_MANIFEST).write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def read_splits(directory):
    directory = Path(directory)
    manifest_path = directory / SPLIT_MANIFEST
    if not manifest_path.exists():
        raise InvalidInputError(f"{directory} has no {SPLIT_MANIFEST}; run the prepare step")

    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    part_names = PartNameSet.from_names(manifest["part_names"])
    splits = {split: read_rounds(split_file(directory, split), part_names) for split in SPLITS}

    return splits, part_names, manifest


def apply_granularity(shapes, points_per_cluster, seed=0):
    shapes = [
        shape.with_segments(
            split_by_granularity(shape.segments, shape.cloud, points_per_cluster, seed)
        )
        for shape in shapes
    ]
    logger.info(
        "granularity_applied",
        points_per_cluster=points_per_cluster,
        mean_segments=mean_segment_count(shapes),
    )
    return shapes


def mean_segment_count(shapes):
    return float(np.mean([shape.segments.num_segments for shape in shapes])) if shapes else 0.0


def check_rounds(splits, shape_ids):
    for split, rounds in splits.items():
        for line, game_round in enumerate(rounds, start=1):
            missing = [i for i in game_round.shape_ids if i not in shape_ids]
            if missing:
                raise InvalidInputError(
                    f"{split} round on line {line} refers to unknown shapes {missing}"
                )


def load_shapes(config, bundle_path=None, shape_ids=None):
    """Shapes of the configured bundle, refined to the configured granularity."""
    bundle = read_bundle(resolve_data_path(bundle_path or config.bundle))
    shapes = list(bundle.shapes)
    if shape_ids is not None:
        wanted = set(shape_ids)
        shapes = [shape for shape in shapes if shape.id in wanted]
    for shape in shapes:
        try:
            shape.cloud.require_model_size()
        except InvalidInputError as exc:
            raise InvalidInputError(f"Shape '{shape.id}': {exc}") from exc
    if config.granularity is not None:
        shapes = apply_granularity(shapes, config.granularity, config.train.seed)

    return shapes


def load_experiment_data(config, vocabulary=None):
    """Read the bundle and splits named by an ExperimentConfig.

    Without a vocabulary one is built from the training words.
    """
    splits, part_names, manifest = read_splits(resolve_data_path(config.splits))
    shapes = load_shapes(config)
    check_rounds(splits, {shape.id for shape in shapes})

    if vocabulary is None:
        vocabulary = Vocabulary.build(
            [r.utterance.words for r in splits["train"]], min_count=config.train.min_count
        )

    logger.info(
        "experiment_data_loaded",
        shapes=len(shapes),
        rounds={split: len(rounds) for split, rounds in splits.items()},
        vocabulary=len(vocabulary),
    )
    return ExperimentData(
        shapes, part_names, splits, vocabulary, manifest.get("category", config.category)
    )
