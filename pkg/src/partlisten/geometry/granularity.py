import numpy as np
import sklearn.cluster as skcluster
import structlog

from ..errors import InvalidInputError
from .pointcloud import SuperSegmentSet
from .segments import compact_assignment

logger = structlog.get_logger()

POINT_LEVEL = 1


class GranularitySplitter:
    """Splits each super-segment into K-means pieces of roughly N points.

    A segment with point set P is replaced by max(1, round(|P| / N)) clusters. Clusters
    are fit per segment, so points of different input segments never share a piece.
    N = 1 turns every point into its own segment.
    """

    def __init__(self, points_per_cluster, max_iter=50, tol=1e-6, seed=0):
        if points_per_cluster < 1:
            raise InvalidInputError("points_per_cluster must be >= 1")

        self.points_per_cluster = points_per_cluster
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def cluster_count(self, n_points):
        return max(1, int(np.floor(n_points / self.points_per_cluster + 0.5)))

    def split(self, segments, cloud):
        if segments.n_points != cloud.n_points:
            raise InvalidInputError("Segments and cloud disagree on point count")

        assignment = np.empty(segments.n_points, dtype=np.int64)
        offset = 0

        for segment in range(segments.num_segments):
            members = segments.members(segment)
            labels = self.fit_segment(cloud.points[members])

            assignment[members] = labels + offset
            offset += int(labels.max()) + 1

        logger.debug(
            "segments_split",
            shape_id=segments.shape_id,
            before=segments.num_segments,
            after=offset,
        )

        return SuperSegmentSet.from_assignment(segments.shape_id, assignment)

    def fit_segment(self, points):
        k = self.cluster_count(len(points))

        if k == 1:
            return np.zeros(len(points), dtype=np.int64)
        if k >= len(points):
            return np.arange(len(points), dtype=np.int64)

        model = skcluster.KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=1,
            max_iter=self.max_iter,
            tol=self.tol,
            random_state=self.seed,
        )
        labels = model.fit_predict(points.astype(np.float64))

        # duplicate points can leave clusters unused
        return compact_assignment(labels)


def split_by_granularity(segments, cloud, points_per_cluster, seed=0):
    return GranularitySplitter(points_per_cluster, seed=seed).split(segments, cloud)
