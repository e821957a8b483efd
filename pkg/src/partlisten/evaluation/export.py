"""Artifacts for looking at a trained listener: colored PLY clouds and word attention."""

import json
from pathlib import Path

import matplotlib as mpl
import numpy as np
import structlog
import torch

from ..errors import InvalidInputError
from ..language.preprocessing import TextMaps, preprocess_with

logger = structlog.get_logger()

PLY_HEADER = """ply
format ascii 1.0
element vertex {count}
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
end_header"""


def palette(num_parts):
    """K distinct uint8 RGB colors."""
    if num_parts < 1:
        raise InvalidInputError("A palette needs at least one part")

    if num_parts <= 10:  # noqa: PLR2004
        colormap = mpl.colormaps["tab10"]
    elif num_parts <= 20:  # noqa: PLR2004
        colormap = mpl.colormaps["tab20"]
    else:
        # hsv starts and ends on red
        colormap = mpl.colormaps["hsv"].resampled(num_parts + 1)

    colors = colormap(np.arange(num_parts))[:, :3]
    return np.round(colors * 255).astype(np.uint8)


def write_ply(path, points, colors):
    """ASCII PLY with one colored vertex per point."""
    points = np.asarray(points, dtype=np.float32)
    colors = np.asarray(colors, dtype=np.uint8)
    if points.ndim != 2 or points.shape[1] != 3:  # noqa: PLR2004
        raise InvalidInputError("PLY export needs an N x 3 point array")
    if colors.shape != points.shape:
        raise InvalidInputError(f"{len(colors)} colors for {len(points)} points")

    rows = np.column_stack([points, colors])
    np.savetxt(
        Path(path),
        rows,
        fmt=["%.6f"] * 3 + ["%d"] * 3,
        header=PLY_HEADER.format(count=len(points)),
        comments="",
    )
    logger.debug("ply_written", path=str(path), points=len(points))
    return Path(path)


def export_segmentation_ply(path, shape, point_parts, num_parts):
    point_parts = np.asarray(point_parts, dtype=np.int64)
    if len(point_parts) != shape.cloud.n_points:
        raise InvalidInputError(f"{len(point_parts)} labels for {shape.cloud.n_points} points")

    return write_ply(path, shape.cloud.points, palette(num_parts)[point_parts])


def _weights(attention, count):
    return [float(w) for w in attention[0, :count]]


def export_word_attention(model, vocabulary, utterance, maps=None, max_length=None):
    """Per-encoder word weights of one utterance.

    The attention encoder only exists on part-agnostic listeners; its entry is None
    for part-aware ones.
    """
    words, _ = preprocess_with(maps or TextMaps.default(), utterance)
    if not words:
        raise InvalidInputError(f"Utterance '{utterance}' has no words after preprocessing")

    length = max_length or len(words)
    tokens = vocabulary.encode(words, max_length=length)
    count = min(len(words), length)
    tokens = torch.tensor([tokens])

    model.eval()
    with torch.no_grad():
        _, classification = model.classification_encoder(tokens)
        attention = None
        if not model.is_part_aware:
            _, weights = model.attention_encoder(tokens)
            attention = _weights(weights, count)

    return {
        "utterance": utterance,
        "tokens": list(words[:count]),
        "unknown": [word for word in words[:count] if word not in vocabulary],
        "classification_weights": _weights(classification, count),
        "attention_weights": attention,
    }


def attention_record(shape_ids, matrices):
    """Shape id -> S x K attention matrix, one row per segment and one column per part."""
    return {
        shape_id: np.asarray(matrix, dtype=np.float64).tolist()
        for shape_id, matrix in zip(shape_ids, matrices, strict=True)
    }


def write_json(path, record):
    Path(path).write_text(json.dumps(record, indent=2), encoding="utf-8")
    return Path(path)
