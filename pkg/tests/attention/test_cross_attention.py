import math

import pytest
import torch

from partlisten.attention import cross_attention
from partlisten.attention.cross_attention import (
    AttentionPooling,
    aggregate,
    attend_pn_agnostic,
    attend_pn_aware,
)
from partlisten.encoders.functional import unit_norm
from partlisten.errors import InvalidInputError

E = math.e


def test_pn_agnostic_hand_computed():
    query = torch.tensor([1.0, 0.0])
    keys = torch.tensor([[1.0, 0.0], [0.0, 1.0]])

    weights = attend_pn_agnostic(query, keys).weights

    assert weights.tolist() == pytest.approx([E / (E + 1), 1 / (E + 1)], abs=1e-4)
    assert weights.tolist() == pytest.approx([0.7311, 0.2689], abs=1e-4)


def test_pn_agnostic_uses_no_scaling():
    query = unit_norm(torch.ones(64))
    keys = torch.stack([query, -query])

    logits = attend_pn_agnostic(query, keys).logits

    assert logits.tolist() == pytest.approx([1.0, -1.0], abs=1e-6)


def test_pn_agnostic_equal_keys_give_uniform_weights():
    keys = unit_norm(torch.ones(5, 8))

    weights = attend_pn_agnostic(unit_norm(torch.rand(8)), keys).weights

    assert weights.tolist() == pytest.approx([0.2] * 5)


def test_pn_agnostic_single_segment():
    weights = attend_pn_agnostic(torch.rand(4), torch.rand(1, 4)).weights

    assert weights.tolist() == [1.0]


def test_pn_agnostic_masks_padding():
    keys = torch.rand(2, 3, 4)
    mask = torch.tensor([[True, True, False], [True, True, True]])

    weights = attend_pn_agnostic(torch.rand(2, 4), keys, mask).weights

    assert weights[0, 2] == 0.0
    assert weights.sum(dim=-1).tolist() == pytest.approx([1.0, 1.0])


def test_nan_inputs_are_rejected():
    keys = torch.tensor([[float("nan"), 0.0]])

    with pytest.raises(InvalidInputError):
        attend_pn_agnostic(torch.ones(2), keys)
    with pytest.raises(InvalidInputError):
        attend_pn_aware(torch.eye(2), keys)


def test_pn_aware_double_softmax_hand_computed():
    # with unit queries and keys from the identity, X is the identity
    attention = attend_pn_aware(torch.eye(2), torch.eye(2))

    high, low = E / (E + 1), 1 / (E + 1)
    assert attention.rows.flatten().tolist() == pytest.approx([high, low, low, high], abs=1e-4)

    column = math.exp(high) / (math.exp(high) + math.exp(low))
    assert column == pytest.approx(0.6135, abs=1e-4)
    expected = [column, 1 - column, 1 - column, column]
    assert attention.weights.flatten().tolist() == pytest.approx(expected, abs=1e-4)


def test_pn_aware_zero_logits_are_uniform():
    attention = attend_pn_aware(torch.zeros(4, 3), torch.zeros(5, 3))

    assert torch.allclose(attention.rows, torch.full((5, 4), 0.25))
    assert torch.allclose(attention.weights, torch.full((5, 4), 0.2))


def test_pn_aware_needs_two_parts():
    with pytest.raises(InvalidInputError):
        attend_pn_aware(torch.ones(1, 3), torch.ones(2, 3))


def test_unknown_softmax_mode():
    with pytest.raises(InvalidInputError):
        attend_pn_aware(torch.eye(2), torch.eye(2), softmax_mode="both")


def test_softmax_order_matters():
    generator = torch.Generator().manual_seed(0)
    queries = unit_norm(torch.randn(4, 16, generator=generator))
    keys = unit_norm(torch.randn(8, 16, generator=generator))

    parts_first = attend_pn_aware(queries, keys, softmax_mode=cross_attention.PN_THEN_SS)
    segments_first = attend_pn_aware(queries, keys, softmax_mode=cross_attention.SS_THEN_PN)

    assert not torch.allclose(parts_first.weights, segments_first.weights, atol=1e-4)


def test_softmax_modes():
    generator = torch.Generator().manual_seed(1)
    queries, keys = torch.randn(3, 4, generator=generator), torch.randn(6, 4, generator=generator)

    ss_only = attend_pn_aware(queries, keys, softmax_mode=cross_attention.SS_ONLY)
    pn_only = attend_pn_aware(queries, keys, softmax_mode=cross_attention.PN_ONLY)
    ss_then_pn = attend_pn_aware(queries, keys, softmax_mode=cross_attention.SS_THEN_PN)

    assert torch.allclose(ss_only.weights, torch.softmax(ss_only.logits, dim=0))
    assert torch.equal(pn_only.weights, pn_only.rows)
    assert torch.allclose(ss_then_pn.weights.sum(dim=1), torch.ones(6))


def test_pn_aware_masks_padding_segments():
    keys = torch.randn(2, 4, 3)
    mask = torch.tensor([[True, True, True, True], [True, True, False, False]])

    attention = attend_pn_aware(unit_norm(torch.randn(3, 3)), keys, mask)

    assert torch.all(attention.weights[1, 2:] == 0)
    assert torch.allclose(attention.weights.sum(dim=-2), torch.ones(2, 3), atol=1e-6)


def test_attention_algebra_on_random_instances():
    generator = torch.Generator().manual_seed(0)

    for _ in range(1000):
        s = int(torch.randint(1, 17, (1,), generator=generator))
        k = int(torch.randint(2, 7, (1,), generator=generator))
        d = int(torch.randint(4, 17, (1,), generator=generator))
        raw_keys = torch.randn(s, d, generator=generator, dtype=torch.float64)
        queries = unit_norm(torch.randn(k, d, generator=generator, dtype=torch.float64))
        keys = unit_norm(raw_keys)

        agnostic = attend_pn_agnostic(queries[0], keys)
        aware = attend_pn_aware(queries, keys)

        assert abs(float(agnostic.weights.sum()) - 1.0) < 1e-6
        assert torch.all(agnostic.weights >= 0)
        assert torch.allclose(aware.rows.sum(dim=1), torch.ones(s, dtype=torch.float64))
        assert torch.allclose(aware.weights.sum(dim=0), torch.ones(k, dtype=torch.float64))
        assert torch.all(aware.weights > 0)
        assert aware.logits.abs().max() <= 1 + 1e-5

        scale = float(torch.rand(1, generator=generator)) * 10 + 0.1
        rescaled = attend_pn_aware(queries, unit_norm(raw_keys * scale))
        assert torch.allclose(rescaled.weights, aware.weights, atol=1e-7, rtol=0)
        assert torch.allclose(rescaled.rows, aware.rows, atol=1e-7, rtol=0)
        rescaled_agnostic = attend_pn_agnostic(queries[0], unit_norm(raw_keys * scale))
        assert torch.allclose(rescaled_agnostic.weights, agnostic.weights, atol=1e-7, rtol=0)


def test_aggregate_selects_and_averages():
    values = torch.tensor([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])

    assert aggregate(values, torch.tensor([0.0, 1.0, 0.0])).tolist() == [0.0, 1.0]
    assert torch.allclose(aggregate(values, torch.full((3,), 1 / 3)), values.mean(dim=0))


def test_aggregate_hand_computed():
    values = torch.tensor([[1.0, 0.0], [0.0, 1.0]])

    assert aggregate(values, torch.tensor([0.75, 0.25])).tolist() == [0.75, 0.25]


def test_aggregate_rejects_row_mismatch():
    with pytest.raises(InvalidInputError):
        aggregate(torch.ones(3, 2), torch.ones(2))


def test_attention_pooling_normalizes_its_output():
    torch.manual_seed(0)
    pooling = AttentionPooling(8, 16)

    pooled = pooling(torch.randn(2, 5, 8), torch.softmax(torch.randn(2, 5), dim=-1))

    assert pooled.shape == (2, 8)
    assert torch.allclose(pooled.mean(dim=-1), torch.zeros(2), atol=1e-5)
