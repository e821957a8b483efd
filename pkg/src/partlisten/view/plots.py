from pathlib import Path

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from ..errors import InvalidInputError  # noqa: E402

logger = structlog.get_logger()

CURVES = (
    ("loss", ("loss", "classification_loss")),
    ("accuracy", ("train_accuracy", "val_accuracy")),
    ("mIoU", ("val_miou",)),
)


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug("plot_saved", path=str(path))
    return path


def plot_training_curves(metrics, path):
    """Loss, accuracy and validation mIoU per epoch from a metrics frame."""
    if metrics.is_empty():
        raise InvalidInputError("No epochs to plot")

    fig, axes = plt.subplots(1, len(CURVES), figsize=(4 * len(CURVES), 3.5))
    epochs = metrics["epoch"].to_numpy()

    for ax, (title, columns) in zip(axes, CURVES, strict=True):
        for column in columns:
            if column in metrics.columns:
                values = metrics[column].cast(float).to_numpy()
                ax.plot(epochs, values, marker="o", label=column)
        ax.set_title(title)
        ax.set_xlabel("epoch")
        ax.legend(fontsize="small")

    return _save(fig, path)


def plot_part_miou(rows, part_names, path):
    """Grouped bars of per-part mIoU, one group per part, one bar per method."""
    rows = [row for row in rows if row["part_miou"]]
    if not rows:
        raise InvalidInputError("No segmentation results to plot")

    fig, ax = plt.subplots(figsize=(1.5 + 1.2 * len(part_names), 3.5))
    positions = np.arange(len(part_names))
    width = 0.8 / len(rows)

    for index, row in enumerate(rows):
        values = [row["part_miou"].get(name) for name in part_names]
        values = [np.nan if v is None else 100 * v for v in values]
        ax.bar(positions + index * width, values, width, label=row["method"])

    ax.set_xticks(positions + 0.4 - width / 2, part_names)
    ax.set_ylabel("mIoU (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize="small")

    return _save(fig, path)


def plot_attention(points, attention, part_names, path, title=None):
    """One 3D scatter per part, points colored by the attention of their segment.

    attention is N x K: each point carries its segment's row of the attention matrix.
    """
    points = np.asarray(points)
    attention = np.asarray(attention)
    if attention.shape != (len(points), len(part_names)):
        raise InvalidInputError(
            f"Attention {attention.shape} does not fit {len(points)} points "
            f"and {len(part_names)} parts"
        )

    fig = plt.figure(figsize=(3.5 * len(part_names), 3.8))
    for k, name in enumerate(part_names):
        ax = fig.add_subplot(1, len(part_names), k + 1, projection="3d")
        # y is up in shape space
        ax.scatter(
            points[:, 0], points[:, 2], points[:, 1], c=attention[:, k], cmap="viridis", s=2
        )
        ax.set_title(name)
        ax.set_axis_off()

    if title:
        fig.suptitle(title)

    return _save(fig, path)
