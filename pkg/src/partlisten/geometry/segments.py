import dataclasses

import numpy as np
import structlog
from scipy.spatial import cKDTree

from ..errors import DegenerateGeometryError, InvalidInputError
from .pointcloud import SEGMENT_POINT_CAP, SuperSegmentSet

logger = structlog.get_logger()

HALF_SPACES = "half_spaces"
REPRESENTATIVES = "representatives"


@dataclasses.dataclass(frozen=True, eq=False)
class SegmentGeometry:
    """Per-segment geometry used to partition a point cloud.

    Half-space mode: each element is a P x 4 array of planes (nx, ny, nz, d). A point p
    lies inside plane j when n_j . p + d_j <= 0, and the convex is the intersection.
    Representative mode: each element is an M x 3 array of points belonging to the segment.
    """

    kind: str
    elements: tuple

    @classmethod
    def from_half_spaces(cls, planes):
        return cls(
            HALF_SPACES, tuple(np.asarray(p, dtype=np.float64).reshape(-1, 4) for p in planes)
        )

    @classmethod
    def from_representatives(cls, points):
        return cls(
            REPRESENTATIVES, tuple(np.asarray(p, dtype=np.float64).reshape(-1, 3) for p in points)
        )

    def __len__(self):
        return len(self.elements)


def convex_signed_distance(points, planes):
    """Max over the plane distances; negative inside the convex."""
    if len(planes) == 0:
        return np.full(len(points), np.inf)

    return (points @ planes[:, :3].T + planes[:, 3]).max(axis=1)


def representative_distance(points, representatives):
    if len(representatives) == 0:
        return np.full(len(points), np.inf)

    distances, _ = cKDTree(representatives).query(points, k=1)
    return distances


def segment_distances(points, geometry):
    """N x S matrix of point-to-segment distances."""
    points = np.asarray(points, dtype=np.float64)

    if geometry.kind == HALF_SPACES:
        columns = [convex_signed_distance(points, planes) for planes in geometry.elements]
    elif geometry.kind == REPRESENTATIVES:
        columns = [representative_distance(points, reps) for reps in geometry.elements]
    else:
        raise InvalidInputError(f"Unknown segment geometry kind '{geometry.kind}'")

    return np.stack(columns, axis=1)


def compact_assignment(assignment):
    """Drop unused segment indices, keeping the relative order of the rest."""
    _, compacted = np.unique(assignment, return_inverse=True)
    return compacted.astype(np.int64)


def assign_points_to_segments(
    cloud, segment_geometry, shape_id="", cap=SEGMENT_POINT_CAP, seed=0
):
    if cloud.n_points == 0:
        raise InvalidInputError("Cannot assign an empty point cloud")
    if len(segment_geometry) == 0:
        raise InvalidInputError("Segment geometry is empty")

    distances = segment_distances(cloud.points, segment_geometry)
    if not np.isfinite(distances).any(axis=1).all():
        raise DegenerateGeometryError(f"Shape {shape_id} has points no segment can claim")

    # argmin keeps the first minimum, so ties go to the lowest segment index
    assignment = np.argmin(distances, axis=1)
    compacted = compact_assignment(assignment)

    dropped = len(segment_geometry) - (int(compacted.max()) + 1)
    if dropped:
        logger.debug("empty_segments_dropped", shape_id=shape_id, dropped=dropped)

    return SuperSegmentSet.from_assignment(shape_id, compacted, cap=cap, seed=seed)


def singleton_segments(cloud, shape_id=""):
    """Every point its own segment."""
    return SuperSegmentSet.from_assignment(shape_id, np.arange(cloud.n_points))
