"""Poses, apertures, scene bounds, and the valid-bin window."""

import numpy as np
import pytest
from scipy.constants import c

from radarfield.errors import DegenerateGeometryError
from radarfield.geometry import (
    Aperture,
    Pose,
    SceneBounds,
    cylindrical_aperture,
    multistatic_to_monostatic,
    pose_ranges,
    round_trip_delay,
    valid_bins,
)


class TestSceneBounds:
    def test_corners_and_containment(self):
        b = SceneBounds(center=np.array([1.0, 0.0, 0.0]), side=0.2)
        assert b.corners.shape == (8, 3)
        np.testing.assert_allclose(b.lo, [0.9, -0.1, -0.1])
        np.testing.assert_allclose(b.hi, [1.1, 0.1, 0.1])
        inside = b.contains(np.array([[1.0, 0.0, 0.0], [1.1, 0.1, 0.1], [1.2, 0.0, 0.0]]))
        np.testing.assert_array_equal(inside, [True, True, False])

    def test_rejects_zero_side(self):
        with pytest.raises(ValueError):
            SceneBounds(center=np.zeros(3), side=0.0)


class TestCylindricalAperture:
    def test_four_cardinal_poses(self):
        ap = cylindrical_aperture(radius=0.23, n_angles=4, n_heights=1)
        assert len(ap) == 4
        want = np.array([[0.23, 0, 0], [0, 0.23, 0], [-0.23, 0, 0], [0, -0.23, 0]])
        np.testing.assert_allclose(ap.tx, want, atol=1e-15)
        np.testing.assert_array_equal(ap.tx, ap.rx)

    def test_angle_major_ordering(self):
        ap = cylindrical_aperture(radius=1.0, n_angles=3, n_heights=2, height_extent=0.5)
        assert len(ap) == 6
        # First two poses share angle 0 and sweep height.
        np.testing.assert_allclose(ap.tx[0], [1.0, 0.0, -0.25])
        np.testing.assert_allclose(ap.tx[1], [1.0, 0.0, 0.25])
        assert ap.tx[2][2] == pytest.approx(-0.25)

    def test_heights_span_extent(self):
        ap = cylindrical_aperture(radius=1.0, n_angles=1, n_heights=5, height_extent=0.4)
        np.testing.assert_allclose(ap.tx[:, 2], np.linspace(-0.2, 0.2, 5))

    def test_deterministic(self):
        a = cylindrical_aperture(radius=0.3, n_angles=17, n_heights=3, height_extent=0.1)
        b = cylindrical_aperture(radius=0.3, n_angles=17, n_heights=3, height_extent=0.1)
        np.testing.assert_array_equal(a.tx, b.tx)

    def test_center_offset(self):
        ap = cylindrical_aperture(radius=1.0, n_angles=1, n_heights=1, center=(0, 0, 5.0))
        np.testing.assert_allclose(ap.tx[0], [1.0, 0.0, 5.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            cylindrical_aperture(radius=0.0, n_angles=4, n_heights=1)
        with pytest.raises(ValueError):
            cylindrical_aperture(radius=1.0, n_angles=4, n_heights=2, height_extent=0.0)


class TestDelays:
    def test_monostatic_delay(self):
        pose = Pose(tx=np.array([0.23, 0, 0]), rx=np.array([0.23, 0, 0]))
        tau, r_t, r_r = round_trip_delay(pose, np.array([[0.0, 0.0, 0.0]]))
        assert tau[0] == pytest.approx(2 * 0.23 / c, rel=1e-12)
        assert tau[0] == pytest.approx(1.53439e-9, rel=1e-5)
        assert r_t[0] == pytest.approx(0.23) and r_r[0] == pytest.approx(0.23)

    def test_bistatic_delay(self):
        pose = Pose(tx=np.array([1.0, 0, 0]), rx=np.array([0, 1.0, 0]))
        tau, r_t, r_r = round_trip_delay(pose, np.zeros((1, 3)))
        assert tau[0] == pytest.approx(2.0 / c, rel=1e-12)
        assert r_t[0] == pytest.approx(1.0) and r_r[0] == pytest.approx(1.0)

    def test_monotone_in_distance(self):
        pose = Pose(tx=np.zeros(3), rx=np.zeros(3))
        xs = np.linspace(0.1, 2.0, 50)
        tau, _, _ = round_trip_delay(pose, np.stack([xs, np.zeros(50), np.zeros(50)], axis=1))
        assert np.all(np.diff(tau) > 0)

    def test_degenerate_position(self):
        pose = Pose(tx=np.array([0.5, 0, 0]), rx=np.array([0.5, 0, 0]))
        with pytest.raises(DegenerateGeometryError):
            pose_ranges(pose, np.array([[0.5, 0.0, 0.0]]))


class TestValidBins:
    def test_reference_configuration(self, mmwave_chirp, cube_bounds, full_aperture):
        # 0.36 m cube, 0.23 m standoff cylinder: first 16 bins carry the scene.
        assert valid_bins(mmwave_chirp, cube_bounds, full_aperture, margin=2) == 16

    def test_margin_only_for_point_scene(self, mmwave_chirp):
        # Side below float resolution at 0.23: the cube collapses onto the pose.
        bounds = SceneBounds(center=np.full(3, 0.23), side=1e-20)
        ap = Aperture(tx=np.full((1, 3), 0.23), rx=np.full((1, 3), 0.23))
        assert valid_bins(mmwave_chirp, bounds, ap, margin=2) == 2

    def test_clamped_to_transform_length(self, mmwave_chirp, cube_bounds, full_aperture):
        assert valid_bins(mmwave_chirp, cube_bounds, full_aperture, margin=10_000) == 256

    def test_monotone_in_scene_size(self, mmwave_chirp, full_aperture):
        small = SceneBounds(center=np.zeros(3), side=0.1)
        large = SceneBounds(center=np.zeros(3), side=0.5)
        assert valid_bins(mmwave_chirp, small, full_aperture) <= valid_bins(
            mmwave_chirp, large, full_aperture
        )


class TestMultistatic:
    def test_midpoint_and_error_bound(self):
        tx = np.array([[0.23, 0.0, 0.01]])
        rx = np.array([[0.23, 0.0, -0.01]])
        mono = multistatic_to_monostatic(Aperture(tx=tx, rx=rx))
        np.testing.assert_allclose(mono.tx[0], [0.23, 0.0, 0.0])
        assert mono.pose(0).is_monostatic

        # Worked example: target at the origin, baseline 0.02 m.
        target = np.zeros((1, 3))
        true_half = 0.5 * (np.linalg.norm(tx[0]) + np.linalg.norm(rx[0]))
        mono_range = np.linalg.norm(mono.tx[0])
        err = abs(true_half - mono_range)
        assert err == pytest.approx(2.17e-4, abs=5e-6)
        baseline = np.linalg.norm(tx[0] - rx[0])
        d_min = min(np.linalg.norm(tx[0] - target[0]), np.linalg.norm(rx[0] - target[0]))
        assert err <= baseline**2 / (4 * d_min)

    def test_bound_holds_for_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            center = rng.normal(size=3)
            center /= np.linalg.norm(center)
            center *= rng.uniform(0.5, 2.0)
            half_base = rng.uniform(0.001, 0.05)
            offset = rng.normal(size=3)
            offset /= np.linalg.norm(offset)
            tx = center + half_base * offset
            rx = center - half_base * offset
            target = rng.normal(size=3) * 0.05
            r_t = np.linalg.norm(tx - target)
            r_r = np.linalg.norm(rx - target)
            mono = multistatic_to_monostatic(
                Aperture(tx=tx[None, :], rx=rx[None, :])
            )
            err = abs(0.5 * (r_t + r_r) - np.linalg.norm(mono.tx[0] - target))
            d_min = min(r_t, r_r)
            assert err <= (2 * half_base) ** 2 / (4 * d_min) + 1e-15

    def test_monostatic_passthrough(self):
        pos = np.array([[1.0, 2.0, 3.0]])
        ap = Aperture(tx=pos, rx=pos.copy())
        mono = multistatic_to_monostatic(ap)
        np.testing.assert_array_equal(mono.tx, pos)


class TestApertureType:
    def test_iteration_and_indexing(self):
        ap = cylindrical_aperture(radius=1.0, n_angles=2, n_heights=1)
        poses = list(ap)
        assert len(poses) == 2
        np.testing.assert_array_equal(poses[1].tx, ap.tx[1])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Aperture(tx=np.zeros((2, 3)), rx=np.zeros((3, 3)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Aperture(tx=np.zeros((0, 3)), rx=np.zeros((0, 3)))
