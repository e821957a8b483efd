import pytest

from partlisten.geometry import synthetic
from partlisten.language import synthetic as language_synthetic
from partlisten.language.parts import PartNameSet
from partlisten.language.rounds import SPLITS, split_rounds
from partlisten.language.vocabulary import Vocabulary
from partlisten.training.data import ExperimentData


@pytest.fixture(scope="session")
def chair_catalog():
    return synthetic.PartCatalog.load("chair")


@pytest.fixture(scope="session")
def chairs(chair_catalog):
    return synthetic.generate_synthetic_shapes(chair_catalog, count=12, seed=0)


@pytest.fixture(scope="session")
def chair_games(chairs):
    return language_synthetic.synthesize_reference_games(chairs, count=60, seed=0)


@pytest.fixture
def chair_data(chairs, chair_games):
    splits = dict(zip(SPLITS, split_rounds(chair_games, (0.7, 0.15, 0.15), seed=0), strict=True))
    vocabulary = Vocabulary.build([r.utterance.words for r in splits["train"]])
    part_names = PartNameSet(chairs[0].gt.part_names)

    return ExperimentData(list(chairs), part_names, splits, vocabulary, "chair")
