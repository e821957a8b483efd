"""Dataset bundle I/O.

A bundle is a directory with ``manifest.json`` and three binary files. Every binary file
starts with the magic ``PGB1``; records follow in manifest order, little-endian:

- ``points.bin``:   u32 N, then N x 3 float32
- ``segments.bin``: u32 S, then N u32 assignments
- ``labels.bin``:   N u32 part ids (only when the bundle carries labels)

The manifest lists per-record byte offsets into each file.
"""

import dataclasses
import json
from pathlib import Path

import numpy as np
import structlog

from ..errors import BundleFormatError, InvalidInputError
from .pointcloud import PartLabels, PointCloud, ShapeRecord, SuperSegmentSet

logger = structlog.get_logger()

MAGIC = b"PGB1"
FORMAT_VERSION = 1
MANIFEST = "manifest.json"
POINTS_FILE = "points.bin"
SEGMENTS_FILE = "segments.bin"
LABELS_FILE = "labels.bin"

U32 = np.dtype("<u4")
F32 = np.dtype("<f4")


@dataclasses.dataclass(frozen=True)
class Bundle:
    shapes: tuple
    part_names: tuple

    @property
    def has_labels(self):
        return bool(self.shapes) and all(shape.gt is not None for shape in self.shapes)

    def by_id(self):
        return {shape.id: shape for shape in self.shapes}


def write_bundle(path, shapes, part_names=None):
    path = Path(path)
    shapes = list(shapes)

    labelled = [shape.gt is not None for shape in shapes]
    if any(labelled) and not all(labelled):
        raise InvalidInputError("Either every shape in a bundle carries labels or none does")
    has_labels = bool(shapes) and all(labelled)

    if part_names is None:
        part_names = shapes[0].gt.part_names if has_labels else ()
    part_names = tuple(part_names)

    path.mkdir(parents=True, exist_ok=True)
    records = []

    with (
        (path / POINTS_FILE).open("wb") as points_out,
        (path / SEGMENTS_FILE).open("wb") as segments_out,
    ):
        points_out.write(MAGIC)
        segments_out.write(MAGIC)
        labels_out = (path / LABELS_FILE).open("wb") if has_labels else None
        if labels_out is not None:
            labels_out.write(MAGIC)

        try:
            for shape in shapes:
                records.append(
                    _write_record(shape, part_names, points_out, segments_out, labels_out)
                )
        finally:
            if labels_out is not None:
                labels_out.close()

    if not has_labels:
        (path / LABELS_FILE).unlink(missing_ok=True)

    manifest = {
        "format": MAGIC.decode("ascii"),
        "version": FORMAT_VERSION,
        "part_names": list(part_names),
        "has_labels": has_labels,
        "records": records,
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2), encoding="utf-8")

    logger.info("bundle_written", path=str(path), shapes=len(shapes), labels=has_labels)


def _write_record(shape, part_names, points_out, segments_out, labels_out):
    record = {
        "id": shape.id,
        "category": shape.category,
        "num_points": shape.cloud.n_points,
        "num_segments": shape.segments.num_segments,
        "attributes": dict(shape.attributes),
        "offsets": {"points": points_out.tell(), "segments": segments_out.tell()},
    }

    points_out.write(np.array([shape.cloud.n_points], dtype=U32).tobytes())
    points_out.write(shape.cloud.points.astype(F32).tobytes())

    segments_out.write(np.array([shape.segments.num_segments], dtype=U32).tobytes())
    segments_out.write(shape.segments.assignment.astype(U32).tobytes())

    if labels_out is not None:
        if tuple(shape.gt.part_names) != part_names:
            raise InvalidInputError(f"Shape {shape.id} uses a different part name list")
        record["offsets"]["labels"] = labels_out.tell()
        labels_out.write(shape.gt.labels.astype(U32).tobytes())

    return record


def read_bundle(path):
    path = Path(path)
    manifest = _read_manifest(path / MANIFEST)
    part_names = tuple(manifest.get("part_names", ()))
    has_labels = bool(manifest.get("has_labels", False))

    points_buf = _read_binary(path / POINTS_FILE)
    segments_buf = _read_binary(path / SEGMENTS_FILE)
    labels_buf = _read_binary(path / LABELS_FILE) if has_labels else None

    shapes = []
    for record in manifest["records"]:
        shapes.append(
            _read_record(path, record, part_names, points_buf, segments_buf, labels_buf)
        )

    logger.debug("bundle_read", path=str(path), shapes=len(shapes))
    return Bundle(tuple(shapes), part_names)


def _read_manifest(path):
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise BundleFormatError("Missing manifest", path=path) from exc
    except json.JSONDecodeError as exc:
        raise BundleFormatError("Manifest is not valid JSON", path=path, offset=exc.pos) from exc

    if not isinstance(manifest, dict) or manifest.get("format") != MAGIC.decode("ascii"):
        raise BundleFormatError("Manifest does not describe a PGB1 bundle", path=path, offset=0)
    if not isinstance(manifest.get("records"), list):
        raise BundleFormatError("Manifest has no record list", path=path, offset=0)

    return manifest


def _read_binary(path):
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise BundleFormatError("Missing bundle file", path=path) from exc

    if data[: len(MAGIC)] != MAGIC:
        raise BundleFormatError("Bad magic bytes", path=path, offset=0)

    return _Buffer(path, data)


class _Buffer:
    def __init__(self, path, data):
        self.path = path
        self.data = data

    def read(self, dtype, count, offset):
        end = offset + dtype.itemsize * count
        if offset < len(MAGIC) or end > len(self.data):
            raise BundleFormatError(
                f"Record of {count} values runs past the end of the file",
                path=self.path,
                offset=offset,
            )
        return np.frombuffer(self.data, dtype=dtype, count=count, offset=offset)

    def read_u32(self, offset):
        return int(self.read(U32, 1, offset)[0])


def _read_record(path, record, part_names, points_buf, segments_buf, labels_buf):  # noqa: PLR0913
    try:
        shape_id = record["id"]
        offsets = record["offsets"]
        n_points = int(record["num_points"])
        n_segments = int(record["num_segments"])
        offset = int(offsets["points"])
        segments_offset = int(offsets["segments"])
        labels_offset = int(offsets["labels"]) if labels_buf is not None else None
    except (KeyError, TypeError, ValueError) as exc:
        message = f"Malformed manifest record: {exc}"
        raise BundleFormatError(message, path=path / MANIFEST) from exc

    stored_points = points_buf.read_u32(offset)
    if stored_points != n_points:
        raise BundleFormatError(
            f"Shape {shape_id} point count {stored_points} does not match manifest {n_points}",
            path=points_buf.path,
            offset=offset,
        )
    points = points_buf.read(F32, n_points * 3, offset + U32.itemsize).reshape(n_points, 3)

    offset = segments_offset
    stored_segments = segments_buf.read_u32(offset)
    if stored_segments != n_segments:
        raise BundleFormatError(
            f"Shape {shape_id} segment count {stored_segments} does not match manifest",
            path=segments_buf.path,
            offset=offset,
        )
    assignment = segments_buf.read(U32, n_points, offset + U32.itemsize).astype(np.int64)
    if len(assignment) and assignment.max() >= n_segments:
        raise BundleFormatError(
            f"Shape {shape_id} assigns a point past segment {n_segments - 1}",
            path=segments_buf.path,
            offset=offset,
        )

    gt = None
    if labels_buf is not None:
        labels = labels_buf.read(U32, n_points, labels_offset).astype(np.int64)
        if len(labels) and labels.max() >= len(part_names):
            raise BundleFormatError(
                f"Shape {shape_id} has a label outside the part name list",
                path=labels_buf.path,
                offset=labels_offset,
            )
        gt = PartLabels(labels, part_names)

    try:
        return ShapeRecord(
            id=shape_id,
            category=record.get("category", ""),
            cloud=PointCloud(points.copy()),
            segments=SuperSegmentSet.from_assignment(shape_id, assignment),
            gt=gt,
            attributes=dict(record.get("attributes", {})),
        )
    except InvalidInputError as exc:
        raise BundleFormatError(
            str(exc), path=segments_buf.path, offset=segments_offset
        ) from exc
