import dataclasses
from pathlib import Path

import numpy as np
import polars as pl
import structlog

from ..errors import InvalidInputError
from .parts import detect_mentioned_part
from .preprocessing import preprocess_with

logger = structlog.get_logger()

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.8, 0.1, 0.1)


@dataclasses.dataclass(frozen=True)
class Utterance:
    raw: str
    words: tuple = ()
    mentioned_part: int | None = None


@dataclasses.dataclass(frozen=True)
class GameRound:
    shape_ids: tuple
    target_index: int
    utterance: Utterance

    def __post_init__(self):
        shape_ids = tuple(self.shape_ids)
        if len(shape_ids) != 3 or len(set(shape_ids)) != 3:  # noqa: PLR2004
            raise InvalidInputError(f"A round needs 3 distinct shapes, got {shape_ids}")
        if self.target_index not in (0, 1, 2):
            raise InvalidInputError(f"target_index must be 0, 1 or 2, got {self.target_index}")

        object.__setattr__(self, "shape_ids", shape_ids)

    @property
    def target_id(self):
        return self.shape_ids[self.target_index]

    @property
    def mentioned_part(self):
        return self.utterance.mentioned_part

    def with_utterance(self, utterance):
        return dataclasses.replace(self, utterance=utterance)


def prepare_round(game_round, maps, part_names):
    """Preprocess the raw utterance and detect the part it mentions."""
    words, _ = preprocess_with(maps, game_round.utterance.raw)
    mentioned = detect_mentioned_part(words, part_names)

    return game_round.with_utterance(
        Utterance(game_round.utterance.raw, tuple(words), mentioned)
    )


def rounds_to_frame(rounds, part_names=None):
    def part_name(index):
        if index is None or part_names is None:
            return None
        return part_names.names[index]

    return pl.DataFrame(
        {
            "shape_ids": [list(r.shape_ids) for r in rounds],
            "target_index": [r.target_index for r in rounds],
            "utterance": [r.utterance.raw for r in rounds],
            "words": [list(r.utterance.words) for r in rounds],
            "mentioned_part": [part_name(r.mentioned_part) for r in rounds],
        },
        schema={
            "shape_ids": pl.List(pl.String),
            "target_index": pl.Int64,
            "utterance": pl.String,
            "words": pl.List(pl.String),
            "mentioned_part": pl.String,
        },
    )


def rounds_from_frame(frame, part_names=None):
    missing = {"shape_ids", "target_index", "utterance"} - set(frame.columns)
    if missing:
        raise InvalidInputError(f"Rounds are missing columns {sorted(missing)}")

    rounds = []
    for line, row in enumerate(frame.iter_rows(named=True), start=1):
        mentioned = row.get("mentioned_part")
        if mentioned is not None and part_names is not None:
            mentioned = part_names.index(mentioned)
        elif part_names is None:
            mentioned = None

        try:
            rounds.append(
                GameRound(
                    tuple(row["shape_ids"] or ()),
                    row["target_index"],
                    Utterance(row["utterance"] or "", tuple(row.get("words") or ()), mentioned),
                )
            )
        except InvalidInputError as exc:
            raise InvalidInputError(f"Round on line {line}: {exc}") from exc

    return rounds


def write_rounds(path, rounds, part_names=None):
    rounds_to_frame(rounds, part_names).write_ndjson(Path(path))


def read_rounds(path, part_names=None):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"Rounds file {path} does not exist")
    if path.stat().st_size == 0:
        return []

    return rounds_from_frame(pl.read_ndjson(path), part_names)


def split_rounds(rounds, ratios=DEFAULT_RATIOS, seed=0, shape_disjoint=False):
    """Deterministic train/val/test partition of the rounds.

    With shape_disjoint, rounds whose shapes land in different splits are dropped.
    """
    ratios = tuple(float(r) for r in ratios)
    valid = len(ratios) == len(SPLITS) and min(ratios) >= 0 and abs(sum(ratios) - 1.0) < 1e-6
    if not valid:
        raise InvalidInputError(f"Split ratios must be 3 shares >= 0 summing to 1: {ratios}")
    if len(rounds) < len(SPLITS):
        raise InvalidInputError(f"Cannot split {len(rounds)} rounds into {len(SPLITS)} parts")

    if shape_disjoint:
        return _split_by_shape(rounds, ratios, seed)

    order = np.random.default_rng(seed).permutation(len(rounds))
    sizes = split_sizes(len(rounds), ratios)
    bounds = np.cumsum(sizes)[:-1]

    return tuple([rounds[i] for i in part] for part in np.split(order, bounds))


def split_sizes(n, ratios):
    sizes = [int(np.floor(n * ratio + 0.5)) for ratio in ratios[1:]]
    sizes.insert(0, n - sum(sizes))

    # every split with a nonzero share gets at least one item
    for index, ratio in enumerate(ratios):
        if ratio > 0 and sizes[index] == 0:
            donor = int(np.argmax(sizes))
            sizes[donor] -= 1
            sizes[index] += 1

    return sizes


def _split_by_shape(rounds, ratios, seed):
    shape_ids = sorted({shape_id for r in rounds for shape_id in r.shape_ids})
    order = np.random.default_rng(seed).permutation(len(shape_ids))
    sizes = split_sizes(len(shape_ids), ratios)

    split_of = {}
    for split, part in enumerate(np.split(order, np.cumsum(sizes)[:-1])):
        split_of.update({shape_ids[i]: split for i in part})

    splits = ([], [], [])
    dropped = 0
    for game_round in rounds:
        owners = {split_of[shape_id] for shape_id in game_round.shape_ids}
        if len(owners) == 1:
            splits[owners.pop()].append(game_round)
        else:
            dropped += 1

    if dropped:
        logger.warning("rounds_across_splits_dropped", dropped=dropped, kept=len(rounds) - dropped)

    logger.info("shape_disjoint_split", sizes=[len(s) for s in splits], dropped=dropped)
    return splits


def balanced_weights(rounds, part_names):
    """Per-round sampling weights inversely proportional to the mentioned part's frequency."""
    parts = []
    for game_round in rounds:
        if game_round.mentioned_part is None:
            raise InvalidInputError("Balanced sampling needs a mentioned part on every round")
        parts.append(game_round.mentioned_part)

    if not parts:
        return np.zeros(0)

    parts = np.asarray(parts)
    counts = np.bincount(parts, minlength=len(part_names)).astype(np.float64)
    weights = 1.0 / counts[parts]

    return weights / weights.sum()
