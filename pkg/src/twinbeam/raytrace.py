"""Line-of-sight tracer and narrowband channel synthesis for a ULA at the BS."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayConfig, SceneSpec, aoa_at_bs, aoa_at_bs_many, to_polar, wrap_angle, wrap_angles
from .geometry import CoincidentEndpointsError

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class PathComponent:
    gain_amplitude: float
    gain_phase: float
    delay: float
    aod: float
    aoa: float

    @property
    def complex_gain(self) -> complex:
        return self.gain_amplitude * complex(math.cos(self.gain_phase), math.sin(self.gain_phase))


def wavelength(scene: SceneSpec) -> float:
    return SPEED_OF_LIGHT / scene.carrier_frequency


def trace_los(scene: SceneSpec, u) -> list[PathComponent]:
    """Trace the direct path from ``u`` to the BS.

    Free-space amplitude with unity element gains. Returns a one-element list
    so callers can treat the result like a general multipath trace.
    """
    d, _ = to_polar(u, scene.bs_position)
    if d == 0.0:
        raise CoincidentEndpointsError("coincident endpoints")
    lam = wavelength(scene)
    theta = aoa_at_bs(u, scene)
    return [
        PathComponent(
            gain_amplitude=lam / (4 * math.pi * d),
            gain_phase=wrap_angle(-2 * math.pi * d / lam),
            delay=d / SPEED_OF_LIGHT,
            aod=theta,
            aoa=theta,
        )
    ]


def steering_vector(theta: float, array: ArrayConfig) -> np.ndarray:
    n = np.arange(array.num_elements)
    return np.exp(1j * 2 * np.pi * array.element_spacing * n * np.sin(theta))


def steering_matrix(thetas: np.ndarray, array: ArrayConfig) -> np.ndarray:
    """Row q is ``steering_vector(thetas[q])``."""
    n = np.arange(array.num_elements)
    return np.exp(1j * 2 * np.pi * array.element_spacing * n[None, :] * np.sin(np.asarray(thetas, dtype=float))[:, None])


def synthesize_channel(paths: list[PathComponent], array: ArrayConfig) -> np.ndarray:
    if not paths:
        raise ValueError("no propagation paths")
    h = np.zeros(array.num_elements, dtype=complex)
    for p in paths:
        h = h + p.complex_gain * steering_vector(p.aoa, array)
    return h


def los_channels(scene: SceneSpec, positions: np.ndarray) -> np.ndarray:
    """(M, N) LoS channels for many UE positions at once.

    Row i equals ``synthesize_channel(trace_los(scene, positions[i]), scene.array)``
    up to floating-point rounding in the vectorized trig.
    """
    p = np.asarray(positions, dtype=float).reshape(-1, 2)
    d = np.hypot(p[:, 0] - scene.bs_position.x, p[:, 1] - scene.bs_position.y)
    theta = aoa_at_bs_many(p, scene)
    lam = wavelength(scene)
    amp = lam / (4 * np.pi * d)
    phase = wrap_angles(-2 * np.pi * d / lam)
    gain = amp * (np.cos(phase) + 1j * np.sin(phase))
    return gain[:, None] * steering_matrix(theta, scene.array)
