import numpy as np
import torch

from ..attention.cross_attention import AttentionMap
from ..attention.segmentation import Segmentation, expand_to_points, majority_vote
from ..errors import InvalidInputError

UNIFORM = "uniform"
RANDOM = "random"


def upper_bound_segmentation(segments, gt):
    """Each super-segment labeled with its majority ground-truth part."""
    parts = majority_vote(segments.assignment, gt.labels, segments.num_segments, len(gt.part_names))
    return expand_to_points(parts, segments)


def point_projection_baseline(point_parts, segments, num_parts):
    """Per-point predictions voted up to super-segments."""
    point_parts = np.asarray(point_parts, dtype=np.int64)
    if len(point_parts) != segments.n_points:
        raise InvalidInputError(f"{len(point_parts)} point labels for {segments.n_points} points")

    parts = majority_vote(segments.assignment, point_parts, segments.num_segments, num_parts)
    return Segmentation(parts, parts[segments.assignment])


def baseline_attention(mode, num_segments, num_parts, seed=0):
    """S x K attention whose columns are uniform or the softmax of standard normals."""
    if num_segments < 1 or num_parts < 1:
        raise InvalidInputError("Baseline attention needs S >= 1 and K >= 1")

    shape = (num_segments, num_parts)
    if mode == UNIFORM:
        logits = torch.zeros(shape, dtype=torch.float64)
    elif mode == RANDOM:
        logits = torch.from_numpy(np.random.default_rng(seed).standard_normal(shape))
    else:
        raise InvalidInputError(f"Unknown baseline attention '{mode}'")

    return AttentionMap(logits, None, torch.softmax(logits, dim=0))


class RandomGuesser:
    """Picks one of the three candidates uniformly at random."""

    def __init__(self, seed=0):
        self.seed = seed

    def predict(self, rounds):
        return np.random.default_rng(self.seed).integers(0, 3, size=len(rounds))
