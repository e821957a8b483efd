import dataclasses
import importlib.resources
import json
from pathlib import Path

import numpy as np
import structlog

from ..errors import InvalidInputError
from .pointcloud import POINTS_PER_SHAPE, PartLabels, PointCloud, ShapeRecord
from .primitives import primitive_from_dict
from .segments import SegmentGeometry, assign_points_to_segments

logger = structlog.get_logger()

DEFAULT_NOISE = 0.004


@dataclasses.dataclass(frozen=True)
class PartVariant:
    name: str
    probability: float
    scale: tuple = (1.0, 1.0, 1.0)
    offset: tuple = (0.0, 0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class PartTemplate:
    name: str
    probability: float
    primitives: tuple
    variants: tuple = ()

    def draw_variant(self, rng):
        draw = rng.random()
        cumulative = 0.0

        for variant in self.variants:
            cumulative += variant.probability
            if draw < cumulative:
                return variant

        return None


@dataclasses.dataclass(frozen=True)
class PartCatalog:
    category: str
    parts: tuple
    jitter: float = 0.1

    def __post_init__(self):
        if len(self.parts) < 2:  # noqa: PLR2004
            raise InvalidInputError(f"Catalog '{self.category}' needs at least 2 part types")

        names = [part.name for part in self.parts]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"Catalog '{self.category}' has duplicate part names")

    @property
    def part_names(self):
        return tuple(part.name for part in self.parts)

    @classmethod
    def from_dict(cls, data):
        try:
            parts = tuple(
                PartTemplate(
                    name=part["name"],
                    probability=float(part.get("probability", 1.0)),
                    primitives=tuple(primitive_from_dict(p) for p in part["primitives"]),
                    variants=tuple(
                        PartVariant(
                            name=v["name"],
                            probability=float(v["probability"]),
                            scale=tuple(v.get("scale", (1.0, 1.0, 1.0))),
                            offset=tuple(v.get("offset", (0.0, 0.0, 0.0))),
                        )
                        for v in part.get("variants", [])
                    ),
                )
                for part in data["parts"]
            )
            return cls(data["category"], parts, float(data.get("jitter", 0.1)))
        except KeyError as exc:
            raise InvalidInputError(f"Catalog is missing field {exc}") from exc

    @classmethod
    def load(cls, name_or_path):
        """Load a catalog file, or a shipped catalog by category name."""
        path = Path(name_or_path)

        if path.exists():
            text = path.read_text(encoding="utf-8")
        else:
            resource = importlib.resources.files("partlisten.resources") / "catalogs"
            resource = resource / f"{name_or_path}.json"
            if not resource.is_file():
                raise InvalidInputError(f"No catalog file or shipped catalog '{name_or_path}'")
            text = resource.read_text(encoding="utf-8")

        return cls.from_dict(json.loads(text))


class SyntheticShapeGenerator:
    """Samples primitive-built shapes with labels, attributes and convex super-segments."""

    def __init__(self, catalog, n_points=POINTS_PER_SHAPE, noise=DEFAULT_NOISE):
        self.catalog = catalog
        self.n_points = n_points
        self.noise = noise

    def generate(self, count, seed=0):
        if count < 0:
            raise InvalidInputError("count must be >= 0")

        shapes = [self.generate_shape(index, seed) for index in range(count)]
        logger.info("synthetic_shapes_generated", category=self.catalog.category, count=count)

        return shapes

    def generate_shape(self, index, seed):
        rng = np.random.default_rng([seed, index])
        shape_id = f"{self.catalog.category}-{index:05d}"

        primitives, owners, attributes = self.draw_layout(rng)

        areas = np.array([primitive.area for primitive in primitives])
        counts = rng.multinomial(self.n_points, areas / areas.sum())

        points = np.concatenate(
            [p.sample_surface(n, rng) for p, n in zip(primitives, counts, strict=True)]
        )
        labels = np.repeat(owners, counts)
        points += rng.normal(0.0, self.noise, size=points.shape)

        cells = [cell for primitive in primitives for cell in primitive.cells()]
        raw_cloud = PointCloud(points)
        segments = assign_points_to_segments(
            raw_cloud, SegmentGeometry.from_half_spaces(cells), shape_id=shape_id
        )

        present = set(labels.tolist())
        attributes = {
            name: variant
            for name, variant in attributes.items()
            if self.catalog.part_names.index(name) in present
        }

        return ShapeRecord(
            id=shape_id,
            category=self.catalog.category,
            cloud=raw_cloud.normalized(),
            segments=segments,
            gt=PartLabels(labels, self.catalog.part_names),
            attributes=attributes,
        )

    def draw_layout(self, rng):
        primitives = []
        owners = []
        attributes = {}

        for part_index, part in enumerate(self.catalog.parts):
            exists = rng.random() < part.probability
            variant = part.draw_variant(rng)
            jitter = 1.0 + rng.uniform(-self.catalog.jitter, self.catalog.jitter)

            if not exists:
                continue

            scale = np.full(3, jitter)
            offset = np.zeros(3)
            if variant is not None:
                scale = scale * np.asarray(variant.scale)
                offset = np.asarray(variant.offset)
                attributes[part.name] = variant.name

            for primitive in part.primitives:
                primitives.append(primitive.transformed(scale, offset))
                owners.append(part_index)

        if not primitives:
            fallback = int(np.argmax([part.probability for part in self.catalog.parts]))
            primitives = list(self.catalog.parts[fallback].primitives)
            owners = [fallback] * len(primitives)

        return primitives, np.asarray(owners), attributes


def generate_synthetic_shapes(catalog, count, seed=0):
    return SyntheticShapeGenerator(catalog).generate(count, seed)
