import pytest
import torch

from partlisten.config import EncoderConfig
from partlisten.encoders.part_encoder import PartNameEncoder
from partlisten.errors import InvalidInputError


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return PartNameEncoder(4, EncoderConfig())


def test_every_part_gets_a_distinct_unit_query(encoder):
    with torch.no_grad():
        queries = encoder()

    assert queries.shape == (4, 64)
    assert torch.allclose(queries.norm(dim=-1), torch.ones(4), atol=1e-5)
    assert len({tuple(q.tolist()) for q in queries}) == 4


def test_same_part_twice_is_identical(encoder):
    with torch.no_grad():
        assert torch.equal(encoder.encode_part_name(2), encoder.encode_part_name(2))


@pytest.mark.parametrize("part", [-1, 4])
def test_out_of_range_part_is_rejected(encoder, part):
    with pytest.raises(InvalidInputError):
        encoder.encode_part_name(part)
