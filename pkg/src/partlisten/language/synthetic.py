import collections
import dataclasses

import numpy as np
import structlog

from ..errors import InvalidInputError
from .parts import PartNameSet
from .rounds import GameRound, Utterance

logger = structlog.get_logger()

PRESENCE = "presence"
ABSENCE = "absence"
ATTRIBUTE = "attribute"


@dataclasses.dataclass(frozen=True)
class TemplateSet:
    presence: tuple = (
        "a {category} with {part}",
        "the {category} that has a {part}",
        "{category} with a {part}",
    )
    absence: tuple = (
        "a {category} without {part}",
        "the {category} that has no {part}",
        "{category} with no {part}",
    )
    attribute: tuple = (
        "a {category} with {adjective} {part}",
        "the {category} with a {adjective} {part}",
        "{adjective} {part}",
    )

    def for_kind(self, kind):
        return getattr(self, kind)


@dataclasses.dataclass(frozen=True)
class Claim:
    """A checkable statement about one part of a shape."""

    kind: str
    part: int
    part_name: str
    adjective: str | None = None

    def holds(self, shape):
        if self.kind == PRESENCE:
            return shape.has_part(self.part)
        if self.kind == ABSENCE:
            return not shape.has_part(self.part)
        return shape.attributes.get(self.part_name) == self.adjective

    def render(self, template, category):
        return template.format(category=category, part=self.part_name, adjective=self.adjective)


class ReferenceGameSynthesizer:
    """Builds template reference games from labelled shapes.

    A part takes part in existence/absence claims only when it is present in at least
    min_rate and at most 1 - min_rate of the shapes; attribute claims follow the same
    rule on the share of shapes carrying the attribute.
    """

    def __init__(
        self,
        shapes,
        templates=None,
        category=None,
        min_rate=0.1,
        max_attempts=100,
    ):
        shapes = list(shapes)
        if any(shape.gt is None for shape in shapes):
            raise InvalidInputError("Reference games need shapes with part labels")
        if len(shapes) < 3:  # noqa: PLR2004
            raise InvalidInputError("Reference games need at least 3 shapes")

        self.shapes = shapes
        self.templates = templates or TemplateSet()
        self.part_names = PartNameSet(shapes[0].gt.part_names)
        self.category = category or shapes[0].category
        self.min_rate = min_rate
        self.max_attempts = max_attempts
        self._split_cache = {}

    def is_balanced(self, rate):
        return self.min_rate <= rate <= 1.0 - self.min_rate

    def eligible_claims(self):
        claims = collections.defaultdict(list)
        n_shapes = len(self.shapes)

        for part, name in enumerate(self.part_names.names):
            present = sum(shape.has_part(part) for shape in self.shapes) / n_shapes
            if self.is_balanced(present):
                claims[part] += [Claim(PRESENCE, part, name), Claim(ABSENCE, part, name)]

            adjectives = collections.Counter(
                shape.attributes[name] for shape in self.shapes if name in shape.attributes
            )
            for adjective in sorted(adjectives):
                if self.is_balanced(adjectives[adjective] / n_shapes):
                    claims[part].append(Claim(ATTRIBUTE, part, name, adjective))

        excluded = [n for i, n in enumerate(self.part_names.names) if i not in claims]
        if excluded:
            logger.info("parts_excluded_from_games", parts=excluded)

        return dict(claims)

    def synthesize(self, count, seed=0):
        rng = np.random.default_rng(seed)
        claims = self.eligible_claims()
        failures = collections.Counter()
        rounds = []

        while len(rounds) < count and claims:
            part = sorted(claims)[rng.integers(len(claims))]
            claim = claims[part][rng.integers(len(claims[part]))]
            templates = self.templates.for_kind(claim.kind)
            template = templates[rng.integers(len(templates))]

            game_round = self.draw_round(claim, template, rng)
            if game_round is not None:
                rounds.append(game_round)
                continue

            failures[part] += 1
            if failures[part] >= self.max_attempts:
                logger.warning(
                    "part_skipped",
                    part=self.part_names.names[part],
                    attempts=failures[part],
                )
                del claims[part]

        if len(rounds) < count:
            logger.warning("reference_games_short", requested=count, produced=len(rounds))

        return rounds

    def split_shapes(self, claim):
        if claim not in self._split_cache:
            holds = [claim.holds(shape) for shape in self.shapes]
            self._split_cache[claim] = (
                [shape.id for shape, ok in zip(self.shapes, holds, strict=True) if ok],
                [shape.id for shape, ok in zip(self.shapes, holds, strict=True) if not ok],
            )
        return self._split_cache[claim]

    def draw_round(self, claim, template, rng):
        satisfying, others = self.split_shapes(claim)
        if not satisfying or len(others) < 2:  # noqa: PLR2004
            return None

        target = satisfying[rng.integers(len(satisfying))]
        distractors = [others[i] for i in rng.choice(len(others), size=2, replace=False)]
        target_index = int(rng.integers(3))
        distractors.insert(target_index, target)

        text = claim.render(template, self.category)
        utterance = Utterance(text, tuple(text.split()), claim.part)

        return GameRound(tuple(distractors), target_index, utterance)


def synthesize_reference_games(shapes, templates=None, count=1000, seed=0, **kwargs):
    return ReferenceGameSynthesizer(shapes, templates, **kwargs).synthesize(count, seed)
