"""Labeled (position, beam power) datasets from the replica and the surrogate real world."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codebook import Codebook, beam_powers, build_from_angles
from .geometry import Position, SceneSpec, discretize_grids
from .raytrace import los_channels

log = logging.getLogger(__name__)

# stream tag for drawing per-beam angle offsets, kept apart from per-point streams
_OFFSET_STREAM = 2**32 - 1


class SchemaError(ValueError):
    pass


@dataclass(eq=False)
class Dataset:
    """Positions ``(M, 2)`` and linear beam powers ``(M, Q)``; labels are derived."""

    positions: np.ndarray
    powers: np.ndarray
    origin: Position = Position(0.0, 0.0)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.powers.ndim != 2 or self.powers.shape[0] != self.positions.shape[0]:
            raise ValueError("positions and powers must have matching lengths")
        self.origin = Position(*map(float, self.origin))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def codebook_size(self) -> int:
        return self.powers.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.powers, axis=1)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.positions[idx], self.powers[idx], self.origin)


@dataclass(frozen=True)
class NormStats:
    max_distance: float
    max_abs_xy: float

    def __post_init__(self):
        if not (self.max_distance > 0 and self.max_abs_xy > 0):
            raise ValueError("degenerate normalization")


@dataclass(frozen=True)
class PerturbationSpec:
    position_noise_std: float = 0.0
    beam_angle_offsets: tuple[float, ...] = field(default_factory=tuple)
    gain_jitter_db_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beam_angle_offsets", tuple(float(o) for o in self.beam_angle_offsets))
        if self.position_noise_std < 0 or self.gain_jitter_db_std < 0:
            raise ValueError("noise standard deviations must be >= 0")

    @classmethod
    def zero(cls, q: int, rng_seed: int = 0) -> "PerturbationSpec":
        return cls(0.0, (0.0,) * q, 0.0, rng_seed)


def draw_beam_offsets(q: int, std: float, seed: int) -> np.ndarray:
    """One Gaussian angle offset per beam (radians)."""
    rng = np.random.default_rng([seed, _OFFSET_STREAM])
    return rng.normal(0.0, 1.0, size=q) * std


def drive_by_positions(scene: SceneSpec, interval: float = 0.5) -> np.ndarray:
    """Sample positions over every UE rectangle at ``interval`` spacing.

    When the interval is a whole multiple of a rectangle's grid spacing the
    samples are taken from that rectangle's replica grid, so they coincide
    bit-for-bit with replica points.
    """
    out = []
    for g in scene.grids:
        ratio = interval / g.spacing
        stride = round(ratio)
        if stride >= 1 and abs(ratio - stride) < 1e-9:
            ny, nx = g.shape
            pts = g.points().reshape(ny, nx, 2)
            out.append(pts[::stride, ::stride].reshape(-1, 2))
        else:
            out.append(g.points(spacing=interval))
    return np.concatenate(out, axis=0)


def _remove_bs_points(scene: SceneSpec, positions: np.ndarray) -> np.ndarray:
    coincident = (positions[:, 0] == scene.bs_position.x) & (positions[:, 1] == scene.bs_position.y)
    if coincident.any():
        log.warning("skipped %d grid point(s) coincident with the BS", int(coincident.sum()))
    return positions[~coincident]


def generate_twin_dataset(scene: SceneSpec, cb: Codebook, positions: np.ndarray | None = None) -> Dataset:
    """Trace every grid point (or the given positions) and record its beam powers."""
    pts = discretize_grids(scene) if positions is None else np.asarray(positions, dtype=float).reshape(-1, 2)
    pts = _remove_bs_points(scene, pts)
    h = los_channels(scene, pts)
    return Dataset(pts, beam_powers(h, cb), scene.bs_position)


def make_surrogate_real(
    twin_scene: SceneSpec, true_cb: Codebook, spec: PerturbationSpec, sample_positions: np.ndarray
) -> Dataset:
    """Stand-in for field measurements, derived from the replica plus impairments.

    The channel is traced from the true sample position and measured with a
    codebook whose beams are rotated by ``spec.beam_angle_offsets``; the
    recorded position carries Gaussian noise and every beam power a
    log-normal gain error. Point i draws from its own stream seeded by
    ``(rng_seed, i)`` so results do not depend on evaluation order.
    """
    q = true_cb.size
    offsets = np.asarray(spec.beam_angle_offsets, dtype=float)
    if offsets.shape != (q,):
        raise ValueError(f"expected {q} beam angle offsets, got {offsets.size}")
    pts = _remove_bs_points(twin_scene, np.asarray(sample_positions, dtype=float).reshape(-1, 2))
    real_cb = build_from_angles(true_cb.angles + offsets, true_cb.array)
    powers = beam_powers(los_channels(twin_scene, pts), real_cb)

    recorded = pts.copy()
    for i in range(len(pts)):
        rng = np.random.default_rng([spec.rng_seed, i])
        noise = rng.normal(0.0, 1.0, size=2)
        jitter_db = rng.normal(0.0, 1.0, size=q)
        if spec.position_noise_std > 0:
            recorded[i] = pts[i] + spec.position_noise_std * noise
        if spec.gain_jitter_db_std > 0:
            powers[i] = powers[i] * 10.0 ** (spec.gain_jitter_db_std * jitter_db / 10.0)
    return Dataset(recorded, powers, twin_scene.bs_position)


# --- CSV ------------------------------------------------------------------

def save_csv(ds: Dataset, path: str | Path) -> None:
    """Header ``x,y,p_0,...``; positions relative to the dataset origin, powers linear."""
    q = ds.codebook_size
    rel = ds.positions - np.array(ds.origin)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["x", "y"] + [f"p_{i}" for i in range(q)])
        for u, p in zip(rel, ds.powers):
            w.writerow([repr(float(v)) for v in u] + [repr(float(v)) for v in p])


def load_csv(path: str | Path, num_beams: int | None = None, origin=(0.0, 0.0)) -> Dataset:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaError(f"{path}: line 1: empty file")
    header = [c.strip() for c in rows[0]]
    q = len(header) - 2
    expected = ["x", "y"] + [f"p_{i}" for i in range(q)]
    if q < 1 or header != expected:
        raise SchemaError(f"{path}: line 1: expected header x,y,p_0,...,p_{{Q-1}}, got {','.join(header)}")
    if num_beams is not None and q != num_beams:
        raise SchemaError(f"{path}: line 1: expected {num_beams + 2} columns, got {len(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != q + 2:
            raise SchemaError(f"{path}: line {lineno}: expected {q + 2} columns, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise SchemaError(f"{path}: line {lineno}: non-numeric cell") from None
        if not all(math.isfinite(v) for v in vals):
            raise SchemaError(f"{path}: line {lineno}: non-finite value")
        if any(v < 0 for v in vals[2:]):
            raise SchemaError(f"{path}: line {lineno}: negative beam power")
        data.append(vals)
    if not data:
        raise SchemaError(f"{path}: empty dataset")
    arr = np.array(data)
    return Dataset(arr[:, :2] + np.array(origin, dtype=float), arr[:, 2:], Position(*origin))


# --- features -------------------------------------------------------------

def fit_norm_stats(ds: Dataset) -> NormStats:
    if len(ds) == 0:
        raise ValueError("cannot fit normalization on an empty dataset")
    rel = ds.positions - np.array(ds.origin)
    max_d = float(np.max(np.hypot(rel[:, 0], rel[:, 1])))
    max_xy = float(np.max(np.abs(rel)))
    if max_d == 0.0 or max_xy == 0.0:
        raise ValueError("degenerate normalization")
    return NormStats(max_d, max_xy)


def featurize(u, stats: NormStats, origin) -> np.ndarray:
    """Cartesian and polar position features, each scaled into [-1, 1].

    ``u`` may be one position or an (M, 2) stack.
    """
    u = np.asarray(u, dtype=float)
    rel = u - np.asarray(origin, dtype=float)
    x, y = rel[..., 0], rel[..., 1]
    d = np.hypot(x, y)
    az = np.arctan2(y, x)
    az = np.where(az == -np.pi, np.pi, az)
    az = np.where(d == 0, 0.0, az)
    return np.stack([x / stats.max_abs_xy, y / stats.max_abs_xy, d / stats.max_distance, az / np.pi], axis=-1)


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle followed by a prefix split."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    n_train = int(round(train_fraction * len(ds)))
    if n_train == 0 or n_train == len(ds):
        raise ValueError(f"split of {len(ds)} points at {train_fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(len(ds))
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
