import itertools

import numpy as np
import pytest

from partlisten.errors import DegenerateGeometryError, InvalidInputError
from partlisten.geometry.pointcloud import PointCloud
from partlisten.geometry.primitives import box_planes
from partlisten.geometry.segments import SegmentGeometry, assign_points_to_segments


def brute_force_assignment(points, convexes):
    labels = []
    for point in points:
        best, best_distance = None, np.inf
        for index, planes in enumerate(convexes):
            distance = max(float(np.dot(plane[:3], point) + plane[3]) for plane in planes)
            if distance < best_distance:
                best, best_distance = index, distance
        labels.append(best)
    return labels


def test_single_segment_takes_every_point():
    cloud = PointCloud(np.random.default_rng(0).normal(size=(50, 3)))
    geometry = SegmentGeometry.from_half_spaces([box_planes([-1, -1, -1], [1, 1, 1])])

    segments = assign_points_to_segments(cloud, geometry)

    assert segments.num_segments == 1
    assert segments.assignment.tolist() == [0] * 50


def test_half_spaces_split_along_x():
    cloud = PointCloud([[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]])
    geometry = SegmentGeometry.from_half_spaces([[[1, 0, 0, 0]], [[-1, 0, 0, 0]]])

    segments = assign_points_to_segments(cloud, geometry)

    assert segments.assignment.tolist() == [0, 1]


def test_four_points_two_convexes_match_enumeration():
    points = np.array([[0.1, 0.1, 0.1], [0.9, 0.5, 0.5], [0.45, 0.2, 0.8], [2.0, 2.0, 2.0]])
    convexes = [box_planes([0, 0, 0], [0.5, 1, 1]), box_planes([0.5, 0, 0], [1, 1, 1])]

    segments = assign_points_to_segments(
        PointCloud(points), SegmentGeometry.from_half_spaces(convexes)
    )

    # third point: distances -0.05 and 0.05; last point: 1.5 and 1.0
    assert segments.assignment.tolist() == [0, 1, 0, 1]
    assert segments.assignment.tolist() == brute_force_assignment(points, convexes)


def test_small_random_instances_match_enumeration():
    rng = np.random.default_rng(11)

    for n_points, n_convexes in itertools.product([1, 5, 16], [1, 2, 4]):
        points = rng.uniform(-1, 1, size=(n_points, 3))
        convexes = []
        for _ in range(n_convexes):
            low = rng.uniform(-1, 0.5, size=3)
            convexes.append(box_planes(low, low + rng.uniform(0.2, 1.0, size=3)))

        segments = assign_points_to_segments(
            PointCloud(points), SegmentGeometry.from_half_spaces(convexes)
        )

        expected = np.array(brute_force_assignment(points.astype(np.float32), convexes))
        _, compacted = np.unique(expected, return_inverse=True)
        assert segments.assignment.tolist() == compacted.tolist()


def test_empty_segments_are_dropped_and_reindexed():
    cloud = PointCloud([[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]])
    geometry = SegmentGeometry.from_half_spaces(
        [[[1, 0, 0, 0]], box_planes([10, 10, 10], [11, 11, 11]), [[-1, 0, 0, 0]]]
    )

    segments = assign_points_to_segments(cloud, geometry)

    assert segments.num_segments == 2
    assert segments.assignment.tolist() == [0, 1]


def test_representative_fallback_uses_nearest_point():
    cloud = PointCloud([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.9, 1.0, 1.0]])
    geometry = SegmentGeometry.from_representatives(
        [[[0.1, 0.0, 0.0], [5.0, 5.0, 5.0]], [[1.0, 1.0, 1.0]]]
    )

    segments = assign_points_to_segments(cloud, geometry)

    assert segments.assignment.tolist() == [0, 1, 1]


def test_empty_cloud_is_invalid():
    geometry = SegmentGeometry.from_half_spaces([[[1, 0, 0, 0]]])

    with pytest.raises(InvalidInputError):
        assign_points_to_segments(PointCloud(np.zeros((0, 3))), geometry)


def test_segments_that_claim_nothing_are_degenerate():
    geometry = SegmentGeometry.from_representatives([np.zeros((0, 3)), np.zeros((0, 3))])

    with pytest.raises(DegenerateGeometryError):
        assign_points_to_segments(PointCloud([[0.0, 0.0, 0.0]]), geometry)


def test_distance_ties_go_to_lowest_segment():
    box = box_planes([0, 0, 0], [1, 1, 1])
    cloud = PointCloud([[0.5, 0.5, 0.5], [3.0, 0.5, 0.5]])

    segments = assign_points_to_segments(cloud, SegmentGeometry.from_half_spaces([box, box]))

    assert segments.assignment.tolist() == [0, 0]
