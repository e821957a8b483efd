import numpy as np
import pytest
import torch

from partlisten.config import EncoderConfig
from partlisten.errors import InvalidInputError
from partlisten.evaluation import evaluator
from partlisten.evaluation.baselines import RANDOM, UNIFORM
from partlisten.evaluation.evaluator import Evaluator, classification_accuracy
from partlisten.language.rounds import GameRound, Utterance
from partlisten.language.vocabulary import Vocabulary
from partlisten.training.batching import ShapeStore, collate_rounds
from partlisten.training.listener import Listener, listener_logits
from tests.factories import make_shape

PARTS = ("back", "seat")
WORDS = ("a", "chair", "with", "back")


class FixedListener:
    def __init__(self, predictions):
        self.predictions = predictions

    def predict(self, rounds):
        return self.predictions[: len(rounds)]


@pytest.fixture
def vocabulary():
    return Vocabulary.build([list(WORDS)])


@pytest.fixture
def shapes():
    return [
        make_shape("a", [0, 0, 1, 1], labels=[0, 0, 1, 1]),
        make_shape("b", [0, 1, 1, 2, 2], labels=[0, 1, 1, 0, 0], seed=1),
        make_shape("c", [0, 0, 0], labels=[1, 1, 1], seed=2),
        make_shape("d", [0, 1], seed=3),
    ]


@pytest.fixture
def model(vocabulary):
    torch.manual_seed(0)
    return Listener(len(vocabulary), PARTS, EncoderConfig()).eval()


@pytest.fixture
def evaluation(model, shapes, vocabulary):
    return Evaluator(model, ShapeStore(shapes), vocabulary, batch_size=2)


def make_round(shape_ids, target=0):
    return GameRound(tuple(shape_ids), target, Utterance(" ".join(WORDS), WORDS, 0))


ROUNDS = [make_round("abc"), make_round("bcd", 2), make_round("dab", 1)]


def test_classification_accuracy():
    accuracy = classification_accuracy(FixedListener(np.array([0, 1, 1])), ROUNDS)

    assert accuracy == pytest.approx(2 / 3)
    assert np.isnan(classification_accuracy(FixedListener(np.array([])), []))


def test_batched_logits_match_single_rounds(evaluation, model, vocabulary):
    logits = evaluation.logits(ROUNDS)

    for game_round, row in zip(ROUNDS, logits, strict=True):
        with torch.no_grad():
            single = listener_logits(game_round, model, evaluation.store, vocabulary)
        assert row == pytest.approx(single.numpy(), abs=1e-5)


def test_no_rounds(evaluation):
    assert evaluation.logits([]).shape == (0, 3)


def test_baseline_weights_cover_real_segments_only(evaluation, vocabulary):
    batch = collate_rounds(ROUNDS[:1], evaluation.store, vocabulary)

    weights = evaluation.baseline_weights(batch, UNIFORM, [0])

    assert weights.shape == (1, 3, 3)
    assert weights[0, 0].tolist() == pytest.approx([0.5, 0.5, 0.0])
    assert weights[0, 2].tolist() == pytest.approx([1.0, 0.0, 0.0])


@pytest.mark.parametrize("mode", [UNIFORM, RANDOM])
def test_baseline_listener_is_deterministic(evaluation, mode):
    listener = evaluation.baseline(mode, seed=3)

    assert listener.predict(ROUNDS).tolist() == listener.predict(ROUNDS).tolist()
    assert set(listener.predict(ROUNDS).tolist()) <= {0, 1, 2}


def test_unknown_baseline(evaluation):
    with pytest.raises(InvalidInputError):
        evaluation.baseline("oracle")


def test_segmentation_report_skips_unlabelled_shapes(evaluation, shapes, mocker):
    info = mocker.patch.object(evaluator.logger, "info")

    report = evaluation.segmentation_report(shapes)

    assert report.shape_ids == ("a", "b", "c")
    assert len(report.instance_miou) == 3
    assert ((report.part_miou >= 0) & (report.part_miou <= 1)).all()
    assert report.to_dict()["num_shapes"] == 3
    assert set(report.to_dict()["part_miou"]) == set(PARTS)
    assert list(report.to_dict()["instance_miou"]) == ["a", "b", "c"]
    info.assert_called_once()


def test_segmentations_follow_the_attention(evaluation, shapes):
    attention = evaluation.attention(["a", "b"])
    segmentations = evaluation.segmentations(shapes[:2])

    assert [a.shape for a in attention] == [(2, 2), (3, 2)]
    for matrix, segmentation in zip(attention, segmentations, strict=True):
        assert segmentation.segment_parts.tolist() == np.argmax(matrix, axis=1).tolist()


def test_upper_bound_is_perfect_on_aligned_segments(evaluation, shapes):
    report = evaluation.upper_bound_report(shapes)

    assert report.average_miou == pytest.approx(1.0)


def test_point_projection_never_beats_the_upper_bound(evaluation, shapes):
    projected = evaluation.point_projection_report(shapes)

    assert projected.average_miou <= evaluation.upper_bound_report(shapes).average_miou


def test_cross_part_uses_the_ground_truth_partonomy(evaluation):
    shapes = [make_shape("a", [0, 0, 1, 1], labels=[0, 1, 2, 2], part_names=("x", "y", "z"))]

    matrix, gt_names = evaluation.cross_part(shapes)

    assert matrix.shape == (2, 3)
    assert gt_names == ("x", "y", "z")


def test_cross_part_needs_labels(evaluation, shapes):
    with pytest.raises(InvalidInputError):
        evaluation.cross_part(shapes[3:])


def test_report_to_dict_turns_nan_into_none():
    report = evaluator.SegmentationReport(
        PARTS, np.array([0.5, np.nan]), float("nan"), np.zeros(0), ()
    )

    assert report.to_dict()["part_miou"] == {"back": 0.5, "seat": None}
    assert report.to_dict()["average_miou"] is None
