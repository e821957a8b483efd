from typing import NamedTuple

import numpy as np
import torch

from ..encoders.segment_encoder import SegmentBatch
from ..errors import InvalidInputError
from ..geometry.segments import singleton_segments
from ..language.vocabulary import MAX_UTTERANCE_LENGTH

SUPER_SEGMENTS = "super_segments"
RAW_POINTS = "raw_points"

NO_PART = -1


class ShapeStore:
    """Shape lookup by id plus the segments the model sees for each shape.

    In raw_points mode every point is its own segment.
    """

    def __init__(self, shapes, input_mode=SUPER_SEGMENTS):
        if input_mode not in (SUPER_SEGMENTS, RAW_POINTS):
            raise InvalidInputError(f"Unknown input mode '{input_mode}'")

        self.shapes = {shape.id: shape for shape in shapes}
        self.input_mode = input_mode
        self._singletons = {}
        self._points = {}

    def __len__(self):
        return len(self.shapes)

    def __contains__(self, shape_id):
        return shape_id in self.shapes

    def __getitem__(self, shape_id):
        try:
            return self.shapes[shape_id]
        except KeyError as exc:
            raise InvalidInputError(f"Unknown shape '{shape_id}'") from exc

    def segments_for(self, shape_id):
        shape = self[shape_id]
        if self.input_mode == SUPER_SEGMENTS:
            return shape.segments

        if shape_id not in self._singletons:
            self._singletons[shape_id] = singleton_segments(shape.cloud, shape.id)
        return self._singletons[shape_id]

    def segment_points(self, shape_id):
        if shape_id not in self._points:
            points = self[shape_id].cloud.points
            self._points[shape_id] = [
                points[indices] for indices in self.segments_for(shape_id).per_segment_points
            ]
        return self._points[shape_id]

    def collate(self, shape_ids):
        return SegmentBatch.collate([self.segment_points(shape_id) for shape_id in shape_ids])


class RoundBatch(NamedTuple):
    """candidates holds, per round, the rows of its 3 shapes in segments."""

    tokens: torch.Tensor
    segments: SegmentBatch
    candidates: torch.Tensor
    targets: torch.Tensor
    parts: torch.Tensor
    shape_ids: tuple

    def __len__(self):
        return len(self.targets)


def encode_words(rounds, vocabulary, max_length=MAX_UTTERANCE_LENGTH):
    encoded = []
    for game_round in rounds:
        if not game_round.utterance.words:
            raise InvalidInputError(f"Round for {game_round.target_id} has no preprocessed words")
        encoded.append(vocabulary.encode(game_round.utterance.words, max_length=max_length))

    return torch.tensor(encoded, dtype=torch.long)


def collate_rounds(rounds, store, vocabulary, max_length=MAX_UTTERANCE_LENGTH):
    if not rounds:
        raise InvalidInputError("Cannot collate an empty list of rounds")

    # dict keeps first-seen order
    rows = {}
    for game_round in rounds:
        for shape_id in game_round.shape_ids:
            rows.setdefault(shape_id, len(rows))

    candidates = [[rows[shape_id] for shape_id in r.shape_ids] for r in rounds]
    parts = [NO_PART if r.mentioned_part is None else r.mentioned_part for r in rounds]

    return RoundBatch(
        tokens=encode_words(rounds, vocabulary, max_length),
        segments=store.collate(rows),
        candidates=torch.tensor(candidates, dtype=torch.long),
        targets=torch.tensor([r.target_index for r in rounds], dtype=torch.long),
        parts=torch.tensor(parts, dtype=torch.long),
        shape_ids=tuple(rows),
    )


class RoundCollator:
    """collate_fn for a DataLoader over rounds."""

    def __init__(self, store, vocabulary, max_length=MAX_UTTERANCE_LENGTH):
        self.store = store
        self.vocabulary = vocabulary
        self.max_length = max_length

    def __call__(self, rounds):
        return collate_rounds(rounds, self.store, self.vocabulary, self.max_length)


def subsample_rounds(rounds, fraction, seed=0):
    """Deterministic subset of floor(n * fraction + 0.5) rounds, at least one."""
    if fraction >= 1.0:
        return list(rounds)

    count = max(1, int(np.floor(len(rounds) * fraction + 0.5)))
    keep = np.sort(np.random.default_rng(seed).choice(len(rounds), size=count, replace=False))
    return [rounds[i] for i in keep]
