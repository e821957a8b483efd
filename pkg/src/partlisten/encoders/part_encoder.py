import torch
from torch import nn

from ..errors import InvalidInputError
from .functional import unit_norm


class PartNameEncoder(nn.Module):
    """Learned part-name token followed by a single linear layer."""

    def __init__(self, num_parts, config, normalize=True):
        super().__init__()

        self.num_parts = num_parts
        self.normalize = normalize
        self.embedding = nn.Embedding(num_parts, config.part_embedding_dim)
        self.linear = nn.Linear(config.part_embedding_dim, config.attention_dim)

    def forward(self, parts=None):
        if parts is None:
            parts = torch.arange(self.num_parts, device=self.embedding.weight.device)
        if parts.numel() and (parts.min() < 0 or parts.max() >= self.num_parts):
            raise InvalidInputError(f"Part index outside [0, {self.num_parts})")

        queries = self.linear(self.embedding(parts))
        return unit_norm(queries) if self.normalize else queries

    def encode_part_name(self, part):
        return self(torch.tensor([part], device=self.embedding.weight.device))[0]
