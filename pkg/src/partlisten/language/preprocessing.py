import dataclasses
import importlib.resources
import re
from pathlib import Path
from typing import NamedTuple

import polars as pl
import structlog

from ..errors import InvalidInputError

logger = structlog.get_logger()

TYPOS = "typos.tsv"
PLURALS = "plurals.tsv"
COMPOUNDS = "compounds.tsv"
LEXICON = "lexicon.tsv"

PUNCTUATION = re.compile(r"[^a-z0-9\s]")


def read_resource(name):
    return (importlib.resources.files("partlisten.resources") / name).read_bytes()


def read_map(source):
    """Read a two-column UTF-8 TSV into a dict. Lines starting with # are comments."""
    if isinstance(source, str | Path):
        try:
            source = Path(source).read_bytes()
        except FileNotFoundError as exc:
            raise InvalidInputError(f"Map file {source} does not exist") from exc

    if not source.strip():
        return {}

    frame = pl.read_csv(
        source,
        separator="\t",
        has_header=False,
        comment_prefix="#",
        quote_char=None,
        schema={"source": pl.String, "target": pl.String},
    )

    frame = frame.drop_nulls().with_columns(
        pl.col("source").str.strip_chars().str.to_lowercase(),
        pl.col("target").str.strip_chars().str.to_lowercase(),
    )

    return dict(zip(frame["source"].to_list(), frame["target"].to_list(), strict=True))


@dataclasses.dataclass(frozen=True)
class TextMaps:
    typos: dict
    compounds: dict
    plurals: dict

    @classmethod
    def default(cls):
        return cls(
            typos=read_map(read_resource(TYPOS)),
            compounds=read_map(read_resource(COMPOUNDS)),
            plurals=read_map(read_resource(PLURALS)),
        )

    @classmethod
    def load(cls, typo_path=None, compound_path=None, plural_path=None):
        """Files that are not given fall back to the shipped defaults."""
        defaults = cls.default()

        return cls(
            typos=read_map(typo_path) if typo_path else defaults.typos,
            compounds=read_map(compound_path) if compound_path else defaults.compounds,
            plurals=read_map(plural_path) if plural_path else defaults.plurals,
        )


class Preprocessed(NamedTuple):
    tokens: list
    is_empty: bool


def tokenize(raw):
    return PUNCTUATION.sub(" ", raw.lower()).split()


def preprocess_utterance(raw, typo_map=None, plural_map=None, compound_map=None):
    """Lowercase, strip punctuation, then apply typo, compound and plural maps in order."""
    typo_map = typo_map or {}
    plural_map = plural_map or {}
    compound_map = compound_map or {}

    tokens = []
    for word in tokenize(raw or ""):
        word = typo_map.get(word, word)
        for piece in compound_map.get(word, word).split():
            tokens.append(plural_map.get(piece, piece))

    if not tokens:
        logger.warning("empty_utterance", raw=raw)

    return Preprocessed(tokens, not tokens)


def preprocess_with(maps, raw):
    return preprocess_utterance(raw, maps.typos, maps.plurals, maps.compounds)
