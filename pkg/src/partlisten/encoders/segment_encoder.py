from typing import NamedTuple

import numpy as np
import torch
from torch import nn

from ..errors import InvalidInputError
from .functional import unit_norm


class SegmentBatch(NamedTuple):
    """Super-segments of several shapes, flattened.

    points / point_mask hold one row per segment across all shapes (padded to the
    largest segment). segment_index maps (shape, slot) to a row; segment_mask marks
    the slots that hold a real segment.
    """

    points: torch.Tensor
    point_mask: torch.Tensor
    segment_index: torch.Tensor
    segment_mask: torch.Tensor

    @classmethod
    def collate(cls, shapes, dtype=torch.float32):
        """shapes: one list of (n_i x 3) point arrays per shape."""
        segments = [np.asarray(points).reshape(-1, 3) for shape in shapes for points in shape]
        if not segments:
            raise InvalidInputError("Cannot collate shapes without segments")

        lengths = np.array([len(points) for points in segments])
        starts = np.cumsum(lengths) - lengths
        rows = np.repeat(np.arange(len(segments)), lengths)
        columns = np.arange(lengths.sum()) - np.repeat(starts, lengths)

        points = torch.zeros((len(segments), int(lengths.max()), 3), dtype=dtype)
        points[rows, columns] = torch.as_tensor(np.concatenate(segments), dtype=dtype)
        point_mask = torch.arange(points.shape[1])[None] < torch.as_tensor(lengths)[:, None]

        counts = torch.tensor([len(shape) for shape in shapes])
        slots = torch.arange(int(counts.max()))[None]
        segment_mask = slots < counts[:, None]
        first = torch.cumsum(counts, dim=0) - counts
        segment_index = (first[:, None] + slots).masked_fill(~segment_mask, 0)

        return cls(points, point_mask, segment_index, segment_mask)


class SegmentFeatures(NamedTuple):
    keys: torch.Tensor
    values: torch.Tensor
    descriptors: torch.Tensor
    mask: torch.Tensor


class SegmentEncoder(nn.Module):
    """Simplified PointNet run on each super-segment on its own.

    A shared per-point MLP (Linear, BatchNorm, ReLU per layer) is max-pooled over the
    points of one segment. Key and value heads are single linear layers.
    """

    def __init__(self, config, normalize=True, with_global_feature=False):
        super().__init__()

        layers = []
        in_dim = 3
        for _ in range(config.segment_layers):
            layers += [
                nn.Linear(in_dim, config.segment_feature_dim),
                nn.BatchNorm1d(config.segment_feature_dim),
                nn.ReLU(),
            ]
            in_dim = config.segment_feature_dim

        self.feature_dim = config.segment_feature_dim
        self.normalize = normalize
        self.with_global_feature = with_global_feature
        self.point_mlp = nn.Sequential(*layers)

        head_dim = self.feature_dim * (2 if with_global_feature else 1)
        self.key_head = nn.Linear(head_dim, config.attention_dim)
        self.value_head = nn.Linear(head_dim, config.attention_dim)

    def encode_segment(self, points):
        if points.ndim != 2 or points.shape[0] == 0:  # noqa: PLR2004
            raise InvalidInputError("A segment needs at least one point")

        return self.point_mlp(points).max(dim=0).values

    def pool(self, points, point_mask):
        if not point_mask.any(dim=1).all():
            raise InvalidInputError("Every segment needs at least one point")

        per_point = self.point_mlp(points[point_mask])
        padded = per_point.new_full((*point_mask.shape, self.feature_dim), float("-inf"))
        padded[point_mask] = per_point

        return padded.max(dim=1).values

    def keys_values(self, features):
        keys = self.key_head(features)
        values = self.value_head(features)

        if self.normalize:
            keys, values = unit_norm(keys), unit_norm(values)

        return keys, values

    def forward(self, batch):
        descriptors = self.pool(batch.points, batch.point_mask)[batch.segment_index]
        mask = batch.segment_mask

        head_input = descriptors
        if self.with_global_feature:
            pooled = descriptors.masked_fill(~mask[..., None], float("-inf")).max(dim=1).values
            head_input = torch.cat([descriptors, pooled[:, None].expand_as(descriptors)], dim=-1)

        keys, values = self.keys_values(head_input)

        return SegmentFeatures(keys, values, descriptors, mask)
