import structlog
import torch

from ..errors import InvalidInputError

logger = structlog.get_logger()

LOG_FLOOR = 1e-12


def smoothed_targets(target_index, num_candidates, smoothing):
    """1 - smoothing on the target, the rest spread evenly over the distractors."""
    target_index = torch.as_tensor(target_index)
    off_target = smoothing / (num_candidates - 1)
    targets = torch.full((*target_index.shape, num_candidates), off_target)

    return targets.scatter(-1, target_index[..., None], 1.0 - smoothing)


def classification_loss(logits, target_index, smoothing=0.0):
    """Cross entropy of the listener logits (... x 3) against smoothed targets, mean
    over rounds."""
    if not 0 <= smoothing < 1:
        raise InvalidInputError("label smoothing must be in [0, 1)")

    targets = smoothed_targets(target_index, logits.shape[-1], smoothing)
    targets = targets.to(dtype=logits.dtype, device=logits.device)

    return -(targets * torch.log_softmax(logits, dim=-1)).sum(dim=-1).mean()


def ce_regularization(rows, mask=None):
    """Sum over segments of -log max_k Y_ik, averaged over shapes.

    The argmax is a pseudo-label: it is picked without gradient, the selected
    probability keeps its gradient.
    """
    pseudo_labels = rows.detach().argmax(dim=-1, keepdim=True)
    selected = rows.gather(-1, pseudo_labels)[..., 0]
    per_segment = -torch.log(selected.clamp_min(LOG_FLOOR))

    if mask is not None:
        per_segment = per_segment.masked_fill(~mask, 0.0)

    per_shape = per_segment.sum(dim=-1)
    return per_shape if per_shape.ndim == 0 else per_shape.mean()


def second_singular_value(matrix):
    if min(matrix.shape) < 2:  # noqa: PLR2004
        return matrix.new_zeros(())

    return torch.linalg.svdvals(matrix)[1]


def group_consistency_loss(descriptors, parts):
    """1 + max_k s2(M_k) - min_{k != l} s2([M_k; M_l]).

    M_k stacks the descriptors (N x d) of the segments predicted as part k and s2 is
    the second singular value.
    """
    parts = torch.as_tensor(parts, device=descriptors.device)
    if len(parts) != len(descriptors):
        raise InvalidInputError(f"{len(parts)} part labels for {len(descriptors)} descriptors")
    if len(parts) == 0:
        raise InvalidInputError("Group consistency needs at least one segment")

    present = sorted(torch.unique(parts).tolist())
    groups = {part: descriptors[parts == part] for part in present}
    within = torch.stack([second_singular_value(group) for group in groups.values()]).max()

    if len(present) < 2:  # noqa: PLR2004
        logger.warning("group_consistency_single_part", part=present[0])
        return 1.0 + within

    across = torch.stack(
        [
            second_singular_value(torch.cat([groups[part], groups[other]]))
            for i, part in enumerate(present)
            for other in present[i + 1 :]
        ]
    ).min()

    return 1.0 + within - across


def few_shot_loss(rows, targets, mask=None):
    """Per-segment cross entropy between Y rows and ground-truth majority parts."""
    targets = torch.as_tensor(targets, device=rows.device)
    selected = rows.gather(-1, targets[..., None])[..., 0]
    per_segment = -torch.log(selected.clamp_min(LOG_FLOOR))

    if mask is None:
        return per_segment.mean()

    return per_segment[mask].mean()
