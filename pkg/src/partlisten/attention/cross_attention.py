"""Cross-attention from language queries to super-segments.

Logits are plain dot products: no 1/sqrt(d) scaling and no temperature. With unit
queries and keys every logit lies in [-1, 1].
"""

from typing import NamedTuple

import torch
from torch import nn

from ..encoders.functional import masked_softmax
from ..errors import InvalidInputError

PN_THEN_SS = "pn_then_ss"
SS_ONLY = "ss_only"
PN_ONLY = "pn_only"
SS_THEN_PN = "ss_then_pn"


class AttentionMap(NamedTuple):
    """X holds the logits. Part-aware maps have Y (rows over parts) and W (columns over
    segments), both ... x S x K. Part-agnostic maps leave Y as None and W is ... x S."""

    logits: torch.Tensor
    rows: torch.Tensor | None
    weights: torch.Tensor


def _check_finite(*tensors):
    for tensor in tensors:
        if torch.isnan(tensor).any():
            raise InvalidInputError("NaN in attention inputs")


def _segment_mask(mask, like):
    if mask is None:
        return torch.ones(like.shape[:-1], dtype=torch.bool, device=like.device)
    return mask


def attend_pn_agnostic(query, keys, mask=None):
    """w = softmax_i(q . k_i) for one query per shape.

    query: ... x d, keys: ... x S x d, mask: ... x S.
    """
    if keys.shape[-2] < 1:
        raise InvalidInputError("Attention needs at least one segment")
    _check_finite(query, keys)

    logits = (keys @ query[..., None])[..., 0]
    weights = masked_softmax(logits, mask, dim=-1)

    return AttentionMap(logits, None, weights)


def attend_pn_aware(queries, keys, mask=None, softmax_mode=PN_THEN_SS):
    """Double softmax over part-name queries.

    queries: K x d (shared by every shape), keys: ... x S x d, mask: ... x S.
    Y is the softmax of X over parts. W depends on softmax_mode:

    - pn_then_ss: softmax of Y over segments
    - ss_only:    softmax of X over segments
    - pn_only:    Y itself
    - ss_then_pn: softmax of X over segments, then over parts
    """
    if queries.shape[-2] < 2:  # noqa: PLR2004
        raise InvalidInputError("Part-aware attention needs at least 2 part names")
    if keys.shape[-2] < 1:
        raise InvalidInputError("Attention needs at least one segment")
    _check_finite(queries, keys)

    mask = _segment_mask(mask, keys)[..., None]
    logits = keys @ queries.transpose(-1, -2)
    rows = torch.softmax(logits, dim=-1).masked_fill(~mask, 0.0)

    def over_segments(x):
        return masked_softmax(x, mask.expand_as(x), dim=-2)

    if softmax_mode == PN_THEN_SS:
        weights = over_segments(rows)
    elif softmax_mode == SS_ONLY:
        weights = over_segments(logits)
    elif softmax_mode == PN_ONLY:
        weights = rows
    elif softmax_mode == SS_THEN_PN:
        weights = torch.softmax(over_segments(logits), dim=-1).masked_fill(~mask, 0.0)
    else:
        raise InvalidInputError(f"Unknown softmax mode '{softmax_mode}'")

    return AttentionMap(logits, rows, weights)


def aggregate(values, weights):
    """Weighted sum of value rows: values ... x S x d, weights ... x S."""
    if values.shape[:-1] != weights.shape:
        raise InvalidInputError(
            f"{weights.shape[-1]} weights for {values.shape[-2]} value rows"
            if weights.ndim
            else "Weights must have one entry per value row"
        )

    return (weights[..., None] * values).sum(dim=-2)


class AttentionPooling(nn.Module):
    """Aggregated value followed by an MLP and LayerNorm."""

    def __init__(self, dim, hidden_dim):
        super().__init__()

        self.mlp = nn.Sequential(nn.Linear(dim, hidden_dim), nn.ReLU(), nn.Linear(hidden_dim, dim))
        self.norm = nn.LayerNorm(dim)

    def forward(self, values, weights):
        return self.norm(self.mlp(aggregate(values, weights)))
