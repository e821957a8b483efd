import pytest
import torch

from partlisten.config import EncoderConfig
from partlisten.encoders.segment_encoder import SegmentBatch, SegmentEncoder
from partlisten.errors import InvalidInputError


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return SegmentEncoder(EncoderConfig()).eval()


def random_segments(sizes, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return [torch.rand((size, 3), generator=generator) - 0.5 for size in sizes]


def test_single_point_feature_is_the_point_mlp_output(encoder):
    point = torch.tensor([[0.1, -0.2, 0.3]])

    with torch.no_grad():
        assert torch.equal(encoder.encode_segment(point), encoder.point_mlp(point)[0])


def test_feature_ignores_duplicates_and_order(encoder):
    points = random_segments([20])[0]

    with torch.no_grad():
        feature = encoder.encode_segment(points)
        doubled = encoder.encode_segment(torch.cat([points, points]))
        shuffled = encoder.encode_segment(points[torch.randperm(20)])

    assert torch.allclose(feature, doubled, atol=1e-6)
    assert torch.allclose(feature, shuffled, atol=1e-6)


def test_empty_segment_is_rejected(encoder):
    with pytest.raises(InvalidInputError):
        encoder.encode_segment(torch.zeros((0, 3)))


def test_pooling_matches_per_segment_encoding(encoder):
    segments = random_segments([5, 12, 1])
    batch = SegmentBatch.collate([segments])

    with torch.no_grad():
        features = encoder(batch)
        expected = torch.stack([encoder.encode_segment(points) for points in segments])

    assert torch.allclose(features.descriptors[0], expected, atol=1e-6)


def test_keys_and_values_have_unit_norm(encoder):
    batch = SegmentBatch.collate([random_segments([4, 9, 7]), random_segments([3, 3], seed=1)])

    with torch.no_grad():
        features = encoder(batch)

    real = features.mask
    assert torch.allclose(features.keys[real].norm(dim=-1), torch.ones(5), atol=1e-5)
    assert torch.allclose(features.values[real].norm(dim=-1), torch.ones(5), atol=1e-5)
    assert features.mask.tolist() == [[True, True, True], [True, True, False]]


def test_changing_one_segment_changes_only_its_row(encoder):
    segments = random_segments([6, 6, 6])
    replaced = [segments[0], random_segments([8], seed=5)[0], segments[2]]

    with torch.no_grad():
        before = encoder(SegmentBatch.collate([segments]))
        after = encoder(SegmentBatch.collate([replaced]))

    changed = (before.keys[0] - after.keys[0]).abs().amax(dim=-1) > 1e-6
    assert changed.tolist() == [False, True, False]


def test_permuting_segments_permutes_rows(encoder):
    segments = random_segments([4, 7, 2, 9])
    order = [2, 0, 3, 1]

    with torch.no_grad():
        features = encoder(SegmentBatch.collate([segments]))
        permuted = encoder(SegmentBatch.collate([[segments[i] for i in order]]))

    assert torch.allclose(features.keys[0][order], permuted.keys[0], atol=1e-6)


def test_global_feature_couples_segments():
    torch.manual_seed(0)
    encoder = SegmentEncoder(EncoderConfig(), with_global_feature=True).eval()
    segments = random_segments([6, 6, 6])
    replaced = [segments[0], random_segments([8], seed=5)[0] * 3, segments[2]]

    with torch.no_grad():
        before = encoder(SegmentBatch.collate([segments]))
        after = encoder(SegmentBatch.collate([replaced]))

    assert not torch.allclose(before.keys[0][0], after.keys[0][0])


def test_positive_scaling_before_the_heads_keeps_normalized_keys(encoder):
    with torch.no_grad():
        encoder.key_head.bias.zero_()
        encoder.value_head.bias.zero_()
        feature = torch.rand(4, 64)

        keys, values = encoder.keys_values(feature)
        scaled_keys, scaled_values = encoder.keys_values(feature * 2.0)

    assert torch.allclose(keys, scaled_keys, atol=1e-6)
    assert torch.allclose(values, scaled_values, atol=1e-6)


def test_without_normalization_heads_are_returned_as_is():
    torch.manual_seed(0)
    encoder = SegmentEncoder(EncoderConfig(), normalize=False).eval()
    feature = torch.rand(3, 64)

    with torch.no_grad():
        keys, values = encoder.keys_values(feature)

        assert torch.equal(keys, encoder.key_head(feature))
        assert torch.equal(values, encoder.value_head(feature))


def test_collate_pads_points_and_segments():
    batch = SegmentBatch.collate([random_segments([2, 3]), random_segments([1])])

    assert batch.points.shape == (3, 3, 3)
    assert batch.point_mask.sum(dim=1).tolist() == [2, 3, 1]
    assert batch.segment_index.tolist() == [[0, 1], [2, 0]]
    assert batch.segment_mask.tolist() == [[True, True], [True, False]]


def test_collate_rejects_empty_input():
    with pytest.raises(InvalidInputError):
        SegmentBatch.collate([])
