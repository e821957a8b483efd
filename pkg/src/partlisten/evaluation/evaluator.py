from typing import NamedTuple

import numpy as np
import structlog
import torch

from ..attention.segmentation import extract_segmentation
from ..errors import InvalidInputError
from ..language.vocabulary import MAX_UTTERANCE_LENGTH
from ..training.batching import collate_rounds
from . import metrics
from .baselines import (
    RANDOM,
    UNIFORM,
    baseline_attention,
    point_projection_baseline,
    upper_bound_segmentation,
)

logger = structlog.get_logger()


class SegmentationReport(NamedTuple):
    part_names: tuple
    part_miou: np.ndarray
    average_miou: float
    instance_miou: np.ndarray
    shape_ids: tuple

    def to_dict(self):
        return {
            "part_names": list(self.part_names),
            "part_miou": dict(zip(self.part_names, _floats(self.part_miou), strict=True)),
            "average_miou": _float(self.average_miou),
            "num_shapes": len(self.shape_ids),
            "instance_miou": dict(
                zip(self.shape_ids, _floats(self.instance_miou), strict=True)
            ),
        }


def _float(value):
    return None if value is None or np.isnan(value) else float(value)


def _floats(values):
    return [_float(v) for v in values]


def classification_accuracy(listener, rounds):
    """Share of rounds whose predicted candidate is the target.

    listener is anything with predict(rounds) -> candidate indices.
    """
    if not rounds:
        return float("nan")

    predictions = np.asarray(listener.predict(rounds))
    targets = np.array([r.target_index for r in rounds])

    return float(np.mean(predictions == targets))


def labeled_shapes(shapes):
    return [shape for shape in shapes if shape.gt is not None]


class Evaluator:
    """Batched, gradient-free predictions of a trained listener."""

    def __init__(  # noqa: PLR0913
        self,
        model,
        store,
        vocabulary,
        batch_size=64,
        iou_average_set=metrics.ALL_PARTS,
        max_length=MAX_UTTERANCE_LENGTH,
    ):
        self.model = model
        self.store = store
        self.vocabulary = vocabulary
        self.batch_size = batch_size
        self.iou_average_set = iou_average_set
        self.max_length = max_length

    @property
    def part_names(self):
        return self.model.part_names

    def batches(self, items):
        for start in range(0, len(items), self.batch_size):
            yield items[start : start + self.batch_size]

    def logits(self, rounds, baseline=None, seed=0):
        self.model.eval()
        results = []

        with torch.no_grad():
            for offset, chunk in enumerate(self.batches(rounds)):
                batch = collate_rounds(chunk, self.store, self.vocabulary, self.max_length)
                weights = None
                if baseline is not None:
                    weights = self.baseline_weights(batch, baseline, [seed, offset])
                results.append(self.model(batch, weights).logits)

        if not results:
            return np.zeros((0, 3))
        return torch.cat(results).numpy()

    def baseline_weights(self, batch, mode, seed):
        """Per-candidate column of a uniform or random attention map."""
        candidates = batch.candidates
        counts = batch.segments.segment_mask.sum(dim=1)
        weights = torch.zeros((*candidates.shape, batch.segments.segment_mask.shape[1]))

        for r, c in np.ndindex(*candidates.shape):
            row = int(candidates[r, c])
            size = int(counts[row])
            attention = baseline_attention(mode, size, self.model.num_parts, [*seed, r, c])
            part = int(batch.parts[r]) if int(batch.parts[r]) >= 0 else 0
            weights[r, c, :size] = attention.weights[:, part].float()

        return weights

    def predict(self, rounds):
        return np.argmax(self.logits(rounds), axis=1)

    def baseline(self, mode, seed=0):
        if mode not in (UNIFORM, RANDOM):
            raise InvalidInputError(f"Unknown baseline attention '{mode}'")
        return BaselineListener(self, mode, seed)

    def attention(self, shape_ids):
        """S_i x K attention matrix of every shape."""
        self.model.eval()
        matrices = []

        with torch.no_grad():
            for chunk in self.batches(list(shape_ids)):
                weights, mask = self.model.segment_attention(
                    self.store.collate(chunk), self.vocabulary
                )
                matrices += [w[m].numpy() for w, m in zip(weights, mask, strict=True)]

        return matrices

    def segmentations(self, shapes):
        shape_ids = [shape.id for shape in shapes]
        return [
            extract_segmentation(attention, self.store.segments_for(shape_id))
            for shape_id, attention in zip(shape_ids, self.attention(shape_ids), strict=True)
        ]

    def report(self, shapes, segmentations):
        shapes = list(shapes)
        if any(shape.gt is None for shape in shapes):
            raise InvalidInputError("Segmentation reports need ground-truth labels")

        average, per_part, instances = metrics.corpus_miou(
            [s.point_parts for s in segmentations],
            [shape.gt.labels for shape in shapes],
            len(self.part_names),
            self.iou_average_set,
        )
        return SegmentationReport(
            self.part_names, per_part, average, instances, tuple(s.id for s in shapes)
        )

    def segmentation_report(self, shapes):
        shapes = labeled_shapes(shapes)
        report = self.report(shapes, self.segmentations(shapes))

        logger.info(
            "segmentation_evaluated", shapes=len(shapes), average_miou=_float(report.average_miou)
        )
        return report

    def upper_bound_report(self, shapes):
        shapes = labeled_shapes(shapes)
        segmentations = [upper_bound_segmentation(shape.segments, shape.gt) for shape in shapes]
        return self.report(shapes, segmentations)

    def point_projection_report(self, shapes):
        """Point-level predictions voted onto each shape's own super-segments."""
        shapes = labeled_shapes(shapes)
        segmentations = [
            point_projection_baseline(s.point_parts, shape.segments, len(self.part_names))
            for shape, s in zip(shapes, self.segmentations(shapes), strict=True)
        ]
        return self.report(shapes, segmentations)

    def cross_part(self, shapes):
        """Model parts x ground-truth parts mIoU matrix, for any ground-truth partonomy."""
        shapes = labeled_shapes(shapes)
        if not shapes:
            raise InvalidInputError("Cross-part mIoU needs labelled shapes")

        gt_names = shapes[0].gt.part_names
        segmentations = self.segmentations(shapes)
        matrix = metrics.cross_part_miou(
            [s.point_parts for s in segmentations],
            [shape.gt.labels for shape in shapes],
            len(self.part_names),
            len(gt_names),
        )
        return matrix, gt_names


class BaselineListener:
    """The trained listener with its attention replaced by a fixed map."""

    def __init__(self, evaluator, mode, seed=0):
        self.evaluator = evaluator
        self.mode = mode
        self.seed = seed

    def predict(self, rounds):
        return np.argmax(self.evaluator.logits(rounds, self.mode, self.seed), axis=1)
