import collections
import json
from pathlib import Path

import structlog

from ..errors import InvalidInputError

logger = structlog.get_logger()

PAD = 0
UNK = 1
SOS = 2
EOS = 3
RESERVED = ("<pad>", "<unk>", "<sos>", "<eos>")

MAX_UTTERANCE_LENGTH = 33


class Vocabulary:
    """Token <-> id map. Ids 0-3 are reserved; unknown tokens encode to UNK."""

    def __init__(self, tokens, min_count=1):
        tokens = list(tokens)
        if len(set(tokens)) != len(tokens):
            raise InvalidInputError("Vocabulary tokens must be unique")
        if set(tokens) & set(RESERVED):
            raise InvalidInputError("Vocabulary tokens may not reuse reserved names")

        self.min_count = min_count
        self.itos = [*RESERVED, *tokens]
        self.stoi = {token: index for index, token in enumerate(self.itos)}

    @classmethod
    def build(cls, token_lists, min_count=1):
        counts = collections.Counter(token for tokens in token_lists for token in tokens)
        kept = sorted(
            (token for token, count in counts.items() if count >= min_count and token),
            key=lambda token: (-counts[token], token),
        )

        logger.debug("vocabulary_built", size=len(kept), dropped=len(counts) - len(kept))
        return cls(kept, min_count=min_count)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def token_id(self, token):
        return self.stoi.get(token, UNK)

    def encode(self, tokens, max_length=MAX_UTTERANCE_LENGTH, pad=True):
        ids = [self.token_id(token) for token in tokens]

        if len(ids) > max_length:
            logger.warning("utterance_truncated", length=len(ids), max_length=max_length)
            ids = ids[:max_length]

        if pad:
            ids += [PAD] * (max_length - len(ids))

        return ids

    def decode(self, ids):
        return [self.itos[i] for i in ids if i != PAD]

    def to_dict(self):
        return {"min_count": self.min_count, "tokens": self.itos[len(RESERVED) :]}

    @classmethod
    def from_dict(cls, data):
        return cls(data["tokens"], min_count=data.get("min_count", 1))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
