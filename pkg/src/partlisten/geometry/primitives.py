import dataclasses

import numpy as np

from ..errors import InvalidInputError

PRISM_SIDES = 8


@dataclasses.dataclass(frozen=True)
class Box:
    center: tuple
    size: tuple
    splits: tuple = (1, 1, 1)

    @property
    def area(self):
        sx, sy, sz = self.size
        return 2.0 * (sx * sy + sy * sz + sx * sz)

    def transformed(self, scale, offset):
        return dataclasses.replace(
            self,
            center=tuple(np.add(self.center, offset).tolist()),
            size=tuple(np.multiply(self.size, scale).tolist()),
        )

    def sample_surface(self, n, rng):
        size = np.asarray(self.size)
        face_areas = np.array([size[1] * size[2], size[0] * size[2], size[0] * size[1]])

        axes = rng.choice(3, size=n, p=face_areas / face_areas.sum())
        signs = rng.choice([-0.5, 0.5], size=n)
        points = rng.uniform(-0.5, 0.5, size=(n, 3))
        points[np.arange(n), axes] = signs

        return points * size + np.asarray(self.center)

    def cells(self):
        """Half-space sets of the grid cells the box is divided into."""
        low = np.asarray(self.center) - np.asarray(self.size) / 2
        step = np.asarray(self.size) / np.asarray(self.splits)

        cells = []
        for index in np.ndindex(*self.splits):
            cell_low = low + step * np.asarray(index)
            cells.append(box_planes(cell_low, cell_low + step))

        return cells


@dataclasses.dataclass(frozen=True)
class Cylinder:
    """Upright (y axis) cylinder."""

    center: tuple
    radius: float
    height: float
    splits: int = 1

    @property
    def area(self):
        return 2.0 * np.pi * self.radius * (self.height + self.radius)

    def transformed(self, scale, offset):
        return dataclasses.replace(
            self,
            center=tuple(np.add(self.center, offset).tolist()),
            radius=float(self.radius * scale[0]),
            height=float(self.height * scale[1]),
        )

    def sample_surface(self, n, rng):
        side_area = 2.0 * np.pi * self.radius * self.height
        on_side = rng.random(n) < side_area / self.area
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)

        radius = np.where(on_side, self.radius, self.radius * np.sqrt(rng.random(n)))
        height = np.where(
            on_side,
            rng.uniform(-0.5, 0.5, size=n) * self.height,
            rng.choice([-0.5, 0.5], size=n) * self.height,
        )

        points = np.stack([radius * np.cos(theta), height, radius * np.sin(theta)], axis=1)
        return points + np.asarray(self.center)

    def cells(self):
        """Prism slabs stacked along the axis."""
        center = np.asarray(self.center)
        angles = np.linspace(0.0, 2.0 * np.pi, PRISM_SIDES, endpoint=False)
        normals = np.stack([np.cos(angles), np.zeros_like(angles), np.sin(angles)], axis=1)
        sides = np.concatenate([normals, -(normals @ center + self.radius)[:, None]], axis=1)

        bottom = center[1] - self.height / 2
        step = self.height / self.splits

        cells = []
        for i in range(self.splits):
            low, high = bottom + i * step, bottom + (i + 1) * step
            caps = np.array([[0.0, 1.0, 0.0, -high], [0.0, -1.0, 0.0, low]])
            cells.append(np.concatenate([sides, caps]))

        return cells


def box_planes(low, high):
    planes = []
    for axis in range(3):
        normal = np.zeros(3)
        normal[axis] = 1.0
        planes.append([*normal, -high[axis]])
        planes.append([*(-normal), low[axis]])

    return np.asarray(planes)


def primitive_from_dict(data):
    kind = data.get("kind")

    if kind == "box":
        return Box(
            center=tuple(data["center"]),
            size=tuple(data["size"]),
            splits=tuple(data.get("splits", (1, 1, 1))),
        )
    if kind == "cylinder":
        return Cylinder(
            center=tuple(data["center"]),
            radius=float(data["radius"]),
            height=float(data["height"]),
            splits=int(data.get("splits", 1)),
        )

    raise InvalidInputError(f"Unknown primitive kind '{kind}'")
