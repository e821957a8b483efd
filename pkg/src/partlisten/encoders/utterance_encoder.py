import torch
from torch import nn

from ..errors import InvalidInputError
from ..language.vocabulary import PAD
from .functional import masked_softmax, unit_norm


class UtteranceEncoder(nn.Module):
    """Word embeddings -> LSTM -> bilinear word attention -> linear head.

    Word scores are h_t^T B c with a learned matrix B and context vector c; pads get
    zero weight. With normalize the output has unit norm.
    """

    def __init__(self, vocab_size, config, output_dim, normalize=False):
        super().__init__()

        hidden = config.lstm_hidden_dim
        self.normalize = normalize
        self.embedding = nn.Embedding(vocab_size, config.word_embedding_dim, padding_idx=PAD)
        self.lstm = nn.LSTM(config.word_embedding_dim, hidden, batch_first=True)
        self.bilinear = nn.Parameter(torch.empty(hidden, hidden))
        self.context = nn.Parameter(torch.empty(hidden))
        self.head = nn.Linear(hidden, output_dim)

        nn.init.xavier_uniform_(self.bilinear)
        nn.init.normal_(self.context, std=hidden**-0.5)

    def word_attention(self, hidden, mask):
        scores = hidden @ (self.bilinear @ self.context)
        return masked_softmax(scores, mask, dim=1)

    def forward(self, tokens):
        mask = tokens != PAD
        if not mask.any(dim=1).all():
            raise InvalidInputError("Cannot encode an utterance made only of padding")

        hidden, _ = self.lstm(self.embedding(tokens))
        attention = self.word_attention(hidden, mask)
        feature = self.head((attention[..., None] * hidden).sum(dim=1))

        if self.normalize:
            feature = unit_norm(feature)

        return feature, attention
