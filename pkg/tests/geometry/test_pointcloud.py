import numpy as np
import pytest

from partlisten.errors import InvalidInputError
from partlisten.geometry.pointcloud import (
    PartLabels,
    PointCloud,
    ShapeRecord,
    SuperSegmentSet,
    subsample_segment,
)


def test_subsample_below_cap_returns_input():
    points = np.arange(10)

    assert subsample_segment(points, cap=512, rng_seed=0).tolist() == list(range(10))


def test_subsample_above_cap_returns_distinct_subset():
    points = np.arange(1000, 1600)

    sampled = subsample_segment(points, cap=512, rng_seed=3)

    assert len(sampled) == 512
    assert len(set(sampled.tolist())) == 512
    assert set(sampled.tolist()) <= set(points.tolist())


def test_subsample_is_deterministic_under_seed():
    points = np.arange(600)

    first = subsample_segment(points, cap=512, rng_seed=7)
    second = subsample_segment(points, cap=512, rng_seed=7)

    assert np.array_equal(first, second)


def test_subsample_rejects_empty_and_bad_cap():
    with pytest.raises(InvalidInputError):
        subsample_segment([], cap=512)

    with pytest.raises(InvalidInputError):
        subsample_segment([1, 2], cap=0)


def test_point_cloud_rejects_non_finite_coordinates():
    with pytest.raises(InvalidInputError):
        PointCloud([[0.0, np.nan, 0.0]])

    with pytest.raises(InvalidInputError):
        PointCloud([[0.0, 1.0]])


def test_model_size_is_enforced():
    PointCloud(np.zeros((2048, 3))).require_model_size()

    with pytest.raises(InvalidInputError):
        PointCloud(np.zeros((100, 3))).require_model_size()


def test_normalized_cloud_fits_unit_cube_at_origin():
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.uniform([2, 0, -1], [6, 1, 1], size=(500, 3)))

    points = cloud.normalized().points
    low, high = points.min(axis=0), points.max(axis=0)

    assert (high - low).max() == pytest.approx(1.0, abs=1e-6)
    assert np.allclose((low + high) / 2, 0.0, atol=1e-6)


def test_segment_set_is_a_partition_with_capped_lists():
    rng = np.random.default_rng(1)
    assignment = np.concatenate([np.zeros(1500), np.ones(500), np.full(48, 2)]).astype(int)
    rng.shuffle(assignment)

    segments = SuperSegmentSet.from_assignment("s", assignment)

    assert segments.num_segments == 3
    assert [len(p) for p in segments.per_segment_points] == [512, 500, 48]

    union = np.concatenate([segments.members(i) for i in range(3)])
    assert sorted(union.tolist()) == list(range(2048))

    for i, capped in enumerate(segments.per_segment_points):
        assert set(capped.tolist()) <= set(segments.members(i).tolist())


def test_segment_set_rejects_segments_without_points():
    with pytest.raises(InvalidInputError):
        SuperSegmentSet.from_assignment("s", [0, 2, 2])


def test_part_labels_must_index_part_names():
    with pytest.raises(InvalidInputError):
        PartLabels([0, 2], ("back", "seat"))


def test_shape_record_checks_assignment_length():
    cloud = PointCloud(np.zeros((4, 3)))
    segments = SuperSegmentSet.from_assignment("s", [0, 0, 1])

    with pytest.raises(InvalidInputError):
        ShapeRecord("s", "chair", cloud, segments)
