"""Beam-steering codebooks, beam powers and exhaustive-search beam selection."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ArrayConfig
from .raytrace import steering_matrix

KINDS = ("uniform_fov", "angle_list", "dft_orthogonal")
DEFAULT_FOV = (-math.pi / 3, math.pi / 3)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Q unit-norm beamforming vectors stored as rows of ``vectors`` (Q, N).

    Angles are relative to the array boresight.
    """

    vectors: np.ndarray
    angles: np.ndarray
    kind: str
    array: ArrayConfig

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown codebook kind {self.kind!r}")
        if self.vectors.shape[0] != self.angles.shape[0]:
            raise ValueError("vectors and angles must have the same length")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_elements": self.array.num_elements,
            "element_spacing": self.array.element_spacing,
            "angles_deg": [math.degrees(a) for a in self.angles],
        }

    @classmethod
    def from_dict(cls, d: dict, boresight_azimuth: float = 0.0) -> "Codebook":
        # vectors are always rebuilt from the angles
        array = ArrayConfig(int(d["num_elements"]), float(d.get("element_spacing", 0.5)), boresight_azimuth)
        cb = build_from_angles(np.radians(d["angles_deg"]), array)
        return Codebook(cb.vectors, cb.angles, d.get("kind", "angle_list"), array)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Codebook":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _normalized(angles: np.ndarray, array: ArrayConfig) -> np.ndarray:
    return steering_matrix(angles, array) / math.sqrt(array.num_elements)


def build_uniform_fov(q: int, fov_min: float, fov_max: float, array: ArrayConfig) -> Codebook:
    """Steer Q beams at the centers of Q equal angular bins over the FoV."""
    if q < 1:
        raise ValueError("codebook needs at least one beam")
    if not fov_min < fov_max:
        raise ValueError("fov_min must be < fov_max")
    step = (fov_max - fov_min) / q
    angles = fov_min + (np.arange(q) + 0.5) * step
    return Codebook(_normalized(angles, array), angles, "uniform_fov", array)


def build_from_angles(angles, array: ArrayConfig) -> Codebook:
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.size == 0:
        raise ValueError("codebook needs at least one beam")
    return Codebook(_normalized(angles, array), angles, "angle_list", array)


def build_dft_orthogonal(array: ArrayConfig) -> Codebook:
    """N mutually orthonormal beams, uniform in sin(angle). Half-wavelength arrays only."""
    if array.element_spacing != 0.5:
        raise ValueError("orthogonality requires half-wavelength spacing")
    n = array.num_elements
    angles = np.arcsin(-1 + (2 * np.arange(n) + 1) / n)
    # exact DFT phases rather than exp(j*pi*n*sin(arcsin(.))) to keep Gram errors at rounding level
    k = np.arange(n)
    s = -1 + (2 * k + 1) / n
    vectors = np.exp(1j * np.pi * s[:, None] * k[None, :]) / math.sqrt(n)
    return Codebook(vectors, angles, "dft_orthogonal", array)


def beam_powers(h: np.ndarray, cb: Codebook) -> np.ndarray:
    """|f_q^H h|^2 for every beam. ``h`` may be (N,) or a stack (M, N)."""
    h = np.asarray(h)
    if h.shape[-1] != cb.vectors.shape[1]:
        raise ValueError(f"dimension mismatch: channel has {h.shape[-1]} entries, codebook {cb.vectors.shape[1]}")
    return np.abs(h @ cb.vectors.conj().T) ** 2


def optimal_beam(h: np.ndarray, cb: Codebook):
    """Index of the strongest beam; ties go to the lowest index."""
    return np.argmax(beam_powers(h, cb), axis=-1)


def beam_ranking(powers: np.ndarray) -> np.ndarray:
    """Beam indices by descending power, ties by lowest index."""
    return np.argsort(-np.asarray(powers), axis=-1, kind="stable")
