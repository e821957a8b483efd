from typing import NamedTuple

import numpy as np
import torch

from ..errors import InvalidInputError


class Segmentation(NamedTuple):
    segment_parts: np.ndarray
    point_parts: np.ndarray


def _as_numpy(values):
    if isinstance(values, torch.Tensor):
        return values.detach().cpu().numpy()
    return np.asarray(values)


def expand_to_points(segment_parts, segments):
    segment_parts = np.asarray(segment_parts, dtype=np.int64)
    if len(segment_parts) != segments.num_segments:
        raise InvalidInputError(
            f"{len(segment_parts)} segment labels for {segments.num_segments} segments"
        )

    return Segmentation(segment_parts, segment_parts[segments.assignment])


def extract_segmentation(attention, segments):
    """Label each super-segment with the part whose attention column is highest.

    attention is S x K: W for part-aware models, or the K template-query attention
    vectors stacked as columns for part-agnostic ones. Ties go to the lowest part.
    """
    attention = _as_numpy(attention)
    if attention.ndim != 2 or attention.shape[1] < 2:  # noqa: PLR2004
        raise InvalidInputError("Segmentation needs an S x K attention matrix with K >= 2")
    if np.isnan(attention).any():
        raise InvalidInputError("NaN in attention matrix")

    # np.argmax returns the first maximum
    return expand_to_points(np.argmax(attention, axis=1), segments)


def majority_vote(assignment, point_labels, num_segments, num_parts):
    """Majority part per segment, ties to the lowest part index."""
    assignment = np.asarray(assignment, dtype=np.int64)
    point_labels = np.asarray(point_labels, dtype=np.int64)
    if assignment.shape != point_labels.shape:
        raise InvalidInputError("Every point needs both a segment and a part label")

    votes = np.zeros((num_segments, num_parts), dtype=np.int64)
    np.add.at(votes, (assignment, point_labels), 1)

    return np.argmax(votes, axis=1)
