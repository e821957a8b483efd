"""Part IoU conventions.

Per part: |pred & gt| / |pred | gt|. A part that is neither predicted nor present
scores 1; a part predicted on a shape without it scores 0. Instance mIoU averages
over all K parts (or only the parts in gt | pred with average_set="present");
corpus mIoU averages instance values over shapes.
"""

import numpy as np

from ..errors import InvalidInputError

ALL_PARTS = "all"
PRESENT_PARTS = "present"


def part_iou(pred_points, gt_points):
    pred, gt = {int(i) for i in pred_points}, {int(i) for i in gt_points}
    if not pred and not gt:
        return 1.0

    return len(pred & gt) / len(pred | gt)


def mask_iou(pred_mask, gt_mask):
    union = np.count_nonzero(pred_mask | gt_mask)
    if union == 0:
        return 1.0

    return np.count_nonzero(pred_mask & gt_mask) / union


def part_ious(pred_labels, gt_labels, num_parts):
    """IoU of every part on one shape (K values)."""
    pred_labels, gt_labels = np.asarray(pred_labels), np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise InvalidInputError(
            f"{len(pred_labels)} predicted labels for {len(gt_labels)} ground-truth labels"
        )

    return np.array([mask_iou(pred_labels == k, gt_labels == k) for k in range(num_parts)])


def instance_miou(pred_labels, gt_labels, num_parts, average_set=ALL_PARTS):
    ious = part_ious(pred_labels, gt_labels, num_parts)
    if average_set == ALL_PARTS:
        return float(ious.mean())
    if average_set != PRESENT_PARTS:
        raise InvalidInputError(f"Unknown IoU average set '{average_set}'")

    present = np.union1d(np.unique(pred_labels), np.unique(gt_labels))
    return float(ious[present].mean())


def corpus_miou(pred_labels, gt_labels, num_parts, average_set=ALL_PARTS):
    """(average mIoU, per-part mIoU over shapes, per-instance mIoU)."""
    if len(pred_labels) != len(gt_labels):
        raise InvalidInputError("Need one prediction per ground-truth shape")
    if not pred_labels:
        return float("nan"), np.full(num_parts, np.nan), np.zeros(0)

    per_part = np.stack(
        [part_ious(pred, gt, num_parts) for pred, gt in zip(pred_labels, gt_labels, strict=True)]
    )
    instances = np.array(
        [
            instance_miou(pred, gt, num_parts, average_set)
            for pred, gt in zip(pred_labels, gt_labels, strict=True)
        ]
    )

    return float(instances.mean()), per_part.mean(axis=0), instances


def cross_part_miou(pred_labels, gt_labels, num_pred_parts, num_gt_parts):
    """K_pred x K_gt matrix: corpus mean IoU of predicted part k against gt part k'."""
    if len(pred_labels) != len(gt_labels):
        raise InvalidInputError("Need one prediction per ground-truth shape")

    matrix = np.zeros((num_pred_parts, num_gt_parts))
    for pred, gt in zip(pred_labels, gt_labels, strict=True):
        pred, gt = np.asarray(pred), np.asarray(gt)
        for k in range(num_pred_parts):
            for other in range(num_gt_parts):
                matrix[k, other] += mask_iou(pred == k, gt == other)

    return matrix / max(len(pred_labels), 1)


def point_accuracy(pred_labels, gt_labels):
    return float(np.mean(np.asarray(pred_labels) == np.asarray(gt_labels)))
