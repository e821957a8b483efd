import dataclasses

from ..errors import InvalidInputError
from .preprocessing import LEXICON, read_map, read_resource
from .vocabulary import MAX_UTTERANCE_LENGTH

DEFAULT_PART_NAMES = ("back", "seat", "leg", "arm")
QUERY_TEMPLATE = "a {category} with {part}"


@dataclasses.dataclass(frozen=True)
class PartNameSet:
    """Ordered part names plus a term -> part name lexicon used for mention detection."""

    names: tuple
    lexicon: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.names)
        if len(names) < 2:  # noqa: PLR2004
            raise InvalidInputError("A part name set needs at least 2 parts")
        if len(set(names)) != len(names):
            raise InvalidInputError(f"Part names must be unique, got {names}")

        # every name is its own synonym; terms of parts outside the set are dropped
        lexicon = {term: part for term, part in self.lexicon.items() if part in names}
        lexicon.update({name: name for name in names})

        object.__setattr__(self, "names", names)
        object.__setattr__(self, "lexicon", lexicon)

    @classmethod
    def from_names(cls, names, lexicon_path=None):
        source = lexicon_path if lexicon_path is not None else read_resource(LEXICON)
        return cls(tuple(names), read_map(source))

    @classmethod
    def default(cls):
        return cls.from_names(DEFAULT_PART_NAMES)

    def __len__(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError as exc:
            raise InvalidInputError(f"Unknown part name '{name}'") from exc

    def parts_in(self, tokens):
        return {self.names.index(self.lexicon[token]) for token in tokens if token in self.lexicon}


def detect_mentioned_part(tokens, part_names):
    """The index of the only part the tokens mention, or None."""
    mentioned = part_names.parts_in(tokens)
    return mentioned.pop() if len(mentioned) == 1 else None


def template_tokens(part_name, category="chair"):
    return QUERY_TEMPLATE.format(category=category, part=part_name).split()


def template_query(part_name, vocabulary, category="chair", max_length=MAX_UTTERANCE_LENGTH):
    """Token ids of the fixed query used to probe a part at test time."""
    return vocabulary.encode(template_tokens(part_name, category), max_length=max_length)
