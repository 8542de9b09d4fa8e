"""Site layout on the ground plane: BS pose, array description, UE grids.

All angles are radians internally, measured counterclockwise from +x.
JSON documents carry angles in degrees and the carrier in GHz.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

# absorbs float error in extent/spacing before flooring (0.3/0.1 -> 2.9999999999999996)
_COUNT_EPS = 1e-9


class CoincidentEndpointsError(ValueError):
    pass


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class ArrayConfig:
    num_elements: int = 16
    element_spacing: float = 0.5  # in wavelengths
    boresight_azimuth: float = 0.0
    element_pattern: str = "isotropic"

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be > 0")
        if self.element_pattern != "isotropic":
            raise ValueError(f"unsupported element pattern {self.element_pattern!r}")


@dataclass(frozen=True)
class UEGridRect:
    origin: Position
    width: float
    height: float
    spacing: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "origin", Position(*map(float, self.origin)))
        if self.width < 0 or self.height < 0:
            raise ValueError("grid width and height must be >= 0")
        if not self.spacing > 0:
            raise ValueError("grid spacing must be > 0")

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, columns) of the discretized rectangle."""
        nx = math.floor(self.width / self.spacing + _COUNT_EPS) + 1
        ny = math.floor(self.height / self.spacing + _COUNT_EPS) + 1
        return ny, nx

    def points(self, spacing: float | None = None) -> np.ndarray:
        """Row-major (M, 2) array of grid points; rows run along +y."""
        s = self.spacing if spacing is None else spacing
        nx = math.floor(self.width / s + _COUNT_EPS) + 1
        ny = math.floor(self.height / s + _COUNT_EPS) + 1
        xs = self.origin.x + np.arange(nx) * s
        ys = self.origin.y + np.arange(ny) * s
        gx, gy = np.meshgrid(xs, ys)  # gx[row, col]
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class SceneSpec:
    bs_position: Position
    array: ArrayConfig
    grids: tuple[UEGridRect, ...]
    carrier_frequency: float  # Hz

    def __post_init__(self):
        object.__setattr__(self, "bs_position", Position(*map(float, self.bs_position)))
        object.__setattr__(self, "grids", tuple(self.grids))
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be > 0")
        if not self.grids:
            raise ValueError("scene needs at least one UE grid")

    # --- JSON -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "bs_position": list(self.bs_position),
            "array": {
                "num_elements": self.array.num_elements,
                "element_spacing": self.array.element_spacing,
                "boresight_azimuth_deg": math.degrees(self.array.boresight_azimuth),
                "element_pattern": self.array.element_pattern,
            },
            "grids": [
                {"origin": list(g.origin), "width": g.width, "height": g.height, "spacing": g.spacing}
                for g in self.grids
            ],
            "carrier_frequency_ghz": self.carrier_frequency / 1e9,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        a = d["array"]
        array = ArrayConfig(
            num_elements=int(a["num_elements"]),
            element_spacing=float(a.get("element_spacing", 0.5)),
            boresight_azimuth=math.radians(float(a.get("boresight_azimuth_deg", 0.0))),
            element_pattern=a.get("element_pattern", "isotropic"),
        )
        grids = [
            UEGridRect(Position(*g["origin"]), float(g["width"]), float(g["height"]), float(g.get("spacing", 0.1)))
            for g in d["grids"]
        ]
        return cls(Position(*d["bs_position"]), array, tuple(grids), float(d["carrier_frequency_ghz"]) * 1e9)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SceneSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    r = math.remainder(a, 2 * math.pi)
    return math.pi if r == -math.pi else r


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`; bit-identical to it for inputs in (-2pi, 2pi]."""
    a = np.asarray(a, dtype=float)
    r = np.where(np.abs(a) > np.pi, np.vectorize(math.remainder, otypes=[float])(a, 2 * math.pi), a)
    return np.where(r == -np.pi, np.pi, r)


def discretize_grids(scene: SceneSpec) -> np.ndarray:
    """All candidate UE positions as an (M, 2) array.

    Order is grid index, then row (y), then column (x). A rectangle with
    zero extent contributes its origin only.
    """
    return np.concatenate([g.points() for g in scene.grids], axis=0)


def to_polar(u, origin) -> tuple[float, float]:
    dx = float(u[0]) - float(origin[0])
    dy = float(u[1]) - float(origin[1])
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return 0.0, 0.0
    return dist, wrap_angle(math.atan2(dy, dx))


def aoa_at_bs(u, scene: SceneSpec) -> float:
    """Azimuth of ``u`` relative to the array boresight, in (-pi, pi].

    Under LoS this is both the arrival and departure angle at the BS.
    """
    dist, az = to_polar(u, scene.bs_position)
    if dist == 0.0:
        raise CoincidentEndpointsError("coincident endpoints")
    return wrap_angle(az - scene.array.boresight_azimuth)


def aoa_at_bs_many(positions: np.ndarray, scene: SceneSpec) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    dx = p[:, 0] - scene.bs_position.x
    dy = p[:, 1] - scene.bs_position.y
    if np.any((dx == 0) & (dy == 0)):
        raise CoincidentEndpointsError("coincident endpoints")
    return wrap_angles(np.arctan2(dy, dx) - scene.array.boresight_azimuth)
