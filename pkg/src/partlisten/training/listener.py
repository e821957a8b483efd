"""The listener: picks the described shape out of three candidates.

Each candidate is reduced to one feature by attending over its super-segments,
concatenated with the utterance's classification feature and scored by a shared MLP.
Part-agnostic listeners query with the encoded utterance; part-aware listeners query
with every part name and keep the column of the part the utterance mentions.
"""

from typing import NamedTuple

import torch
from torch import nn

from ..attention.cross_attention import AttentionPooling, attend_pn_agnostic, attend_pn_aware
from ..encoders.part_encoder import PartNameEncoder
from ..encoders.segment_encoder import SegmentEncoder
from ..encoders.utterance_encoder import UtteranceEncoder
from ..errors import InvalidInputError
from ..language.parts import template_query
from .batching import collate_rounds

PN_AGNOSTIC = "pn_agnostic"
PN_AWARE = "pn_aware"


class ListenerOutput(NamedTuple):
    logits: torch.Tensor
    weights: torch.Tensor
    rows: torch.Tensor | None
    features: object


class ListenerHead(nn.Module):
    """Two-layer MLP scoring concat(utterance feature, shape feature)."""

    def __init__(self, input_dim, hidden_dim):
        super().__init__()

        self.mlp = nn.Sequential(
            nn.Linear(input_dim, hidden_dim), nn.ReLU(), nn.Linear(hidden_dim, 1)
        )

    def forward(self, utterance, shapes):
        utterance = utterance[..., None, :].expand(*shapes.shape[:-1], utterance.shape[-1])
        return self.mlp(torch.cat([utterance, shapes], dim=-1))[..., 0]


class Listener(nn.Module):
    def __init__(  # noqa: PLR0913
        self,
        vocab_size,
        part_names,
        config,
        mode=PN_AWARE,
        softmax_mode="pn_then_ss",
        normalize=True,
        with_global_feature=False,
        category="chair",
    ):
        super().__init__()

        if mode not in (PN_AGNOSTIC, PN_AWARE):
            raise InvalidInputError(f"Unknown listener mode '{mode}'")

        self.mode = mode
        self.part_names = tuple(part_names)
        self.num_parts = len(self.part_names)
        self.category = category
        self.softmax_mode = softmax_mode

        self.segment_encoder = SegmentEncoder(config, normalize, with_global_feature)
        self.classification_encoder = UtteranceEncoder(
            vocab_size, config, config.classification_dim
        )
        if mode == PN_AWARE:
            self.part_encoder = PartNameEncoder(self.num_parts, config, normalize)
        else:
            self.attention_encoder = UtteranceEncoder(
                vocab_size, config, config.attention_dim, normalize=normalize
            )

        self.pooling = AttentionPooling(config.attention_dim, config.head_hidden_dim)
        self.head = ListenerHead(
            config.classification_dim + config.attention_dim, config.head_hidden_dim
        )

    @property
    def is_part_aware(self):
        return self.mode == PN_AWARE

    def part_attention(self, features):
        """Y and W for every shape in a segment batch (B x S x K)."""
        queries = self.part_encoder()
        attention = attend_pn_aware(queries, features.keys, features.mask, self.softmax_mode)
        return attention.rows, attention.weights

    def query_attention(self, tokens, features, rows=None):
        """Weights (R x S) of utterance queries over the shapes at the given rows."""
        query, _ = self.attention_encoder(tokens)
        keys = features.keys if rows is None else features.keys[rows]
        mask = features.mask if rows is None else features.mask[rows]

        return attend_pn_agnostic(query, keys, mask).weights

    def forward(self, batch, weights=None):
        """Listener logits (R x 3) for a RoundBatch.

        weights (R x 3 x S) replaces the learned attention of every candidate.
        """
        features = self.segment_encoder(batch.segments)
        candidates = batch.candidates
        rows = None

        if weights is None and self.is_part_aware:
            if (batch.parts < 0).any():
                raise InvalidInputError("Part-aware listeners need a mentioned part per round")

            rows, shape_weights = self.part_attention(features)
            per_candidate = shape_weights[candidates]
            part = batch.parts[:, None, None, None].expand(*per_candidate.shape[:-1], 1)
            weights = per_candidate.gather(-1, part)[..., 0]
        elif weights is None:
            flat = self.query_attention(
                batch.tokens.repeat_interleave(candidates.shape[1], dim=0),
                features,
                candidates.reshape(-1),
            )
            weights = flat.reshape(*candidates.shape, -1)

        values = features.values[candidates]
        if weights.shape != values.shape[:-1]:
            raise InvalidInputError(
                f"Attention weights {tuple(weights.shape)} do not fit {tuple(values.shape[:-1])}"
            )

        utterance, _ = self.classification_encoder(batch.tokens)
        logits = self.head(utterance, self.pooling(values, weights))

        return ListenerOutput(logits, weights, rows, features)

    def segment_attention(self, segments, vocabulary=None):
        """S x K attention of every part over each shape of a SegmentBatch (B x S x K).

        Part-agnostic listeners stack the attention of one template query per part.
        """
        features = self.segment_encoder(segments)
        if self.is_part_aware:
            _, weights = self.part_attention(features)
            return weights, features.mask

        if vocabulary is None:
            raise InvalidInputError("Part-agnostic segmentation needs the vocabulary")

        columns = []
        for name in self.part_names:
            tokens = torch.tensor([template_query(name, vocabulary, self.category)])
            tokens = tokens.expand(features.keys.shape[0], -1)
            columns.append(self.query_attention(tokens, features))

        return torch.stack(columns, dim=-1), features.mask


def listener_logits(game_round, model, store, vocabulary):
    """The 3 logits of a single round."""
    for shape_id in game_round.shape_ids:
        if shape_id not in store:
            raise InvalidInputError(f"Round refers to unknown shape '{shape_id}'")

    with torch.no_grad():
        return model(collate_rounds([game_round], store, vocabulary)).logits[0]
