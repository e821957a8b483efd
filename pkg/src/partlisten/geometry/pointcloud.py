import dataclasses
import zlib

import numpy as np

from ..errors import InvalidInputError

POINTS_PER_SHAPE = 2048
SEGMENT_POINT_CAP = 512


@dataclasses.dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float32)
        if points.ndim != 2 or points.shape[1] != 3:  # noqa: PLR2004
            raise InvalidInputError(f"Point cloud must be N x 3, got {points.shape}")
        if not np.isfinite(points).all():
            raise InvalidInputError("Point cloud contains non-finite coordinates")

        object.__setattr__(self, "points", points)

    @property
    def n_points(self):
        return len(self.points)

    def require_model_size(self):
        if self.n_points != POINTS_PER_SHAPE:
            raise InvalidInputError(
                f"Clouds entering the model need {POINTS_PER_SHAPE} points, got {self.n_points}"
            )

    def normalized(self):
        """Center the bounding box at the origin and scale its longest side to 1."""
        low = self.points.min(axis=0)
        high = self.points.max(axis=0)
        extent = float((high - low).max())
        scale = 1.0 / extent if extent > 0 else 1.0

        return PointCloud((self.points - (low + high) / 2.0) * scale)


def segment_seed(shape_id, seed):
    return [int(seed), zlib.crc32(shape_id.encode("utf-8"))]


def subsample_segment(points, cap=SEGMENT_POINT_CAP, rng_seed=0):
    """Uniformly subsample a segment's point indices down to cap."""
    if cap < 1:
        raise InvalidInputError("cap must be >= 1")

    points = np.asarray(points, dtype=np.int64)
    if len(points) == 0:
        raise InvalidInputError("Cannot subsample an empty segment")

    if len(points) <= cap:
        return points

    rng = np.random.default_rng(rng_seed)
    return np.sort(rng.choice(points, size=cap, replace=False))


@dataclasses.dataclass(frozen=True, eq=False)
class SuperSegmentSet:
    shape_id: str
    assignment: np.ndarray
    per_segment_points: tuple

    @classmethod
    def from_assignment(cls, shape_id, assignment, cap=SEGMENT_POINT_CAP, seed=0):
        assignment = np.asarray(assignment, dtype=np.int64)

        if assignment.ndim != 1 or len(assignment) == 0:
            raise InvalidInputError("Segment assignment must be a non-empty 1-d array")
        if assignment.min() < 0:
            raise InvalidInputError("Segment indices must be non-negative")

        n_segments = int(assignment.max()) + 1
        counts = np.bincount(assignment, minlength=n_segments)
        if (counts == 0).any():
            empty = np.flatnonzero(counts == 0).tolist()
            raise InvalidInputError(f"Segments {empty} of {shape_id} own no points")

        order = np.argsort(assignment, kind="stable")
        members = np.split(order, np.cumsum(counts)[:-1])
        base_seed = segment_seed(shape_id, seed)

        per_segment = tuple(
            subsample_segment(indices, cap=cap, rng_seed=[*base_seed, i])
            for i, indices in enumerate(members)
        )

        return cls(shape_id, assignment, per_segment)

    @property
    def num_segments(self):
        return len(self.per_segment_points)

    @property
    def n_points(self):
        return len(self.assignment)

    def members(self, segment):
        """All point indices of a segment, before the point cap."""
        return np.flatnonzero(self.assignment == segment)

    def sizes(self):
        return np.bincount(self.assignment, minlength=self.num_segments)


@dataclasses.dataclass(frozen=True, eq=False)
class PartLabels:
    labels: np.ndarray
    part_names: tuple

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        names = tuple(self.part_names)

        if labels.ndim != 1:
            raise InvalidInputError("Part labels must be a 1-d array")
        if len(labels) and (labels.min() < 0 or labels.max() >= len(names)):
            raise InvalidInputError("Part label outside the part name list")

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "part_names", names)

    def present_parts(self):
        return set(np.unique(self.labels).tolist())


@dataclasses.dataclass(frozen=True, eq=False)
class ShapeRecord:
    id: str
    category: str
    cloud: PointCloud
    segments: SuperSegmentSet
    gt: PartLabels | None = None
    attributes: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.segments.n_points != self.cloud.n_points:
            raise InvalidInputError(
                f"Shape {self.id}: {self.segments.n_points} assignments "
                f"for {self.cloud.n_points} points"
            )
        if self.gt is not None and len(self.gt.labels) != self.cloud.n_points:
            raise InvalidInputError(f"Shape {self.id}: label count differs from point count")

    def with_segments(self, segments):
        return dataclasses.replace(self, segments=segments)

    def has_part(self, part):
        return self.gt is not None and bool((self.gt.labels == part).any())
