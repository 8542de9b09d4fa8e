import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twinbeam.codebook import beam_powers, build_uniform_fov
from twinbeam.geometry import ArrayConfig, CoincidentEndpointsError, Position, SceneSpec, UEGridRect
from twinbeam.raytrace import (
    SPEED_OF_LIGHT,
    PathComponent,
    los_channels,
    steering_vector,
    synthesize_channel,
    trace_los,
    wavelength,
)

SCENE = SceneSpec(Position(0, 0), ArrayConfig(16, 0.5, 0.0), (UEGridRect((1, 1), 1, 1),), 60e9)
LAM = SPEED_OF_LIGHT / 60e9


class TestTraceLoS:
    def test_wavelength(self):
        assert wavelength(SCENE) == pytest.approx(4.9965e-3, rel=1e-4)

    def test_unity_distance(self):
        d = LAM / (4 * math.pi)
        (p,) = trace_los(SCENE, (d, 0.0))
        assert p.gain_amplitude == pytest.approx(1.0, rel=1e-14)

    def test_doubling_distance(self):
        (a,) = trace_los(SCENE, (7.0, 3.0))
        (b,) = trace_los(SCENE, (14.0, 6.0))
        assert b.gain_amplitude / a.gain_amplitude == pytest.approx(0.5, rel=1e-14)
        assert 20 * math.log10(b.gain_amplitude / a.gain_amplitude) == pytest.approx(-6.0206, abs=1e-4)

    def test_delay_10m(self):
        (p,) = trace_los(SCENE, (10.0, 0.0))
        assert p.delay == 10.0 / 299792458.0
        assert p.delay == pytest.approx(33.356e-9, abs=1e-12)

    def test_angles_and_phase(self):
        (p,) = trace_los(SCENE, (3.0, 4.0))
        assert p.aoa == p.aod == pytest.approx(math.atan2(4, 3))
        assert -math.pi < p.gain_phase <= math.pi
        expected = cmath.exp(-2j * math.pi * 5.0 / LAM)
        assert cmath.phase(p.complex_gain / p.gain_amplitude) == pytest.approx(cmath.phase(expected), abs=1e-9)

    def test_coincident(self):
        with pytest.raises(CoincidentEndpointsError):
            trace_los(SCENE, (0.0, 0.0))

    @given(st.floats(0.01, 500), st.floats(0.01, 500))
    def test_monotone_in_distance(self, d1, d2):
        near, far = sorted([d1, d2])
        (a,) = trace_los(SCENE, (near, 0.0))
        (b,) = trace_los(SCENE, (far, 0.0))
        assert b.gain_amplitude <= a.gain_amplitude and b.delay >= a.delay
        # distances a few ulp apart can round to the same gain and delay
        if far > near * (1 + 1e-12):
            assert b.gain_amplitude < a.gain_amplitude
            assert b.delay > a.delay


class TestSteering:
    def test_broadside_all_ones(self):
        assert np.array_equal(steering_vector(0.0, ArrayConfig(16)), np.ones(16))

    def test_endfire_two_elements(self):
        np.testing.assert_allclose(steering_vector(math.pi / 2, ArrayConfig(2, 0.5)), [1, -1], atol=1e-15)

    @given(st.floats(-math.pi, math.pi))
    def test_unit_modulus_and_norm(self, theta):
        a = steering_vector(theta, ArrayConfig(16))
        np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-14)
        assert np.linalg.norm(a) == pytest.approx(4.0, rel=1e-14)
        assert a[0] == 1


class TestSynthesize:
    def test_single_path_broadside(self):
        h = synthesize_channel([PathComponent(0.3, 0.0, 0.0, 0.0, 0.0)], ArrayConfig(16))
        np.testing.assert_allclose(h, 0.3 * np.ones(16))

    def test_destructive_pair(self):
        paths = [PathComponent(1.0, 0.0, 0.0, 0.4, 0.4), PathComponent(1.0, math.pi, 0.0, 0.4, 0.4)]
        np.testing.assert_allclose(synthesize_channel(paths, ArrayConfig(16)), 0, atol=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError, match="no propagation paths"):
            synthesize_channel([], ArrayConfig(16))

    @pytest.mark.parametrize("d", [1.0, 10.0, 100.0, 0.37, 512.0])
    def test_norm_identity(self, d):
        h = synthesize_channel(trace_los(SCENE, (d * math.cos(0.3), d * math.sin(0.3))), SCENE.array)
        expected = math.sqrt(16) * LAM / (4 * math.pi * d)
        assert np.linalg.norm(h) == pytest.approx(expected, rel=1e-12)


def test_bulk_matches_scalar_path():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-30, 30, size=(300, 2))
    bulk = los_channels(SCENE, pts)
    scalar = np.array([synthesize_channel(trace_los(SCENE, p), SCENE.array) for p in pts])
    np.testing.assert_allclose(bulk, scalar, rtol=0, atol=1e-12 * np.abs(scalar).max())


def test_bulk_order_independent():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-30, 30, size=(100, 2))
    perm = rng.permutation(100)
    assert np.array_equal(los_channels(SCENE, pts)[perm], los_channels(SCENE, pts[perm]))


@settings(max_examples=50)
@given(st.floats(0, 2 * math.pi))
def test_power_invariant_under_global_phase(phi):
    h = los_channels(SCENE, np.array([[4.0, 2.5]]))[0]
    cb = build_uniform_fov(16, -math.pi / 3, math.pi / 3, SCENE.array)
    np.testing.assert_allclose(beam_powers(h * cmath.exp(1j * phi), cb), beam_powers(h, cb), rtol=1e-12)
