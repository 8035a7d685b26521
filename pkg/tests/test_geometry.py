import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import REFERENCE_COUNTS, deployment_at
from risshaper.channel import steering
from risshaper.config import CoverageDisk, DeploymentRecipe, SystemConfig
from risshaper.errors import DegenerateGeometryError, InvalidConfigError
from risshaper.geometry import (coverage_extremes, default_ray_offsets, dft_directions,
                                disk_point, place_ris_on_curve, sample_rx, solve_geometry)


class TestDftDirections:
    def test_center_and_boundary_rays(self):
        rays = dft_directions(32)
        assert rays[15] == pytest.approx(0.0)        # i = 16 -> arcsin(0)
        assert rays[31] == pytest.approx(math.pi / 2)  # i = 32 -> arcsin(1)

    def test_full_grid_matches_direct_evaluation(self):
        n = 32
        rays = dft_directions(n)
        expected = [math.asin(2 * i / n - 1) for i in range(1, n + 1)]
        np.testing.assert_allclose(rays, expected, rtol=0, atol=0)

    def test_strictly_increasing_within_halfpi(self):
        for n in (2, 7, 32, 64):
            rays = dft_directions(n)
            assert np.all(np.diff(rays) > 0)
            assert rays[0] >= -math.pi / 2 and rays[-1] <= math.pi / 2

    def test_too_few_antennas_rejected(self):
        with pytest.raises(InvalidConfigError):
            dft_directions(1)


class TestPlacement:
    def test_reference_element_counts(self, scenario, scene):
        _, _, _, counts, _ = scene
        assert list(counts) == REFERENCE_COUNTS + REFERENCE_COUNTS[1:]

    def test_panels_sit_exactly_on_their_rays(self, scenario):
        positions, offsets = place_ris_on_curve(scenario.system, scenario.deployment)
        for (x, y), j in zip(positions, offsets):
            r = math.hypot(x, y)
            assert y / r == pytest.approx(2 * j / scenario.system.n_tx, abs=1e-12)

    def test_curve_radii_span(self, scenario):
        positions, offsets = place_ris_on_curve(scenario.system, scenario.deployment)
        radii = np.linalg.norm(positions, axis=1)
        assert radii[0] == pytest.approx(138.0)      # boresight: far end of the curve
        extreme = [i for i, j in enumerate(offsets) if abs(j) == 12]
        assert np.allclose(radii[extreme], 35.0)

    def test_tx_side_steering_exactly_orthogonal(self, scenario, scene):
        dep = deployment_at(scenario, scene, [104.0, 7.0])
        steps = dep.tx_depart_step[1:]
        vecs = [steering(scenario.system.n_tx, s) for s in steps]
        for a in range(len(vecs)):
            for b in range(a + 1, len(vecs)):
                assert abs(np.vdot(vecs[a], vecs[b])) < 1e-10

    def test_symmetric_layout(self, scenario):
        positions, offsets = place_ris_on_curve(scenario.system, scenario.deployment)
        by_offset = {j: p for j, p in zip(offsets, positions)}
        for j in range(1, 13):
            np.testing.assert_allclose(by_offset[j], by_offset[-j] * [1, -1], atol=1e-12)

    def test_ray_override(self, scenario):
        recipe = DeploymentRecipe(ris_count=3, ray_offsets=(0, -4, 4))
        positions, offsets = place_ris_on_curve(scenario.system, recipe)
        assert offsets == (0, -4, 4)
        assert len(positions) == 3

    def test_too_many_panels_rejected(self):
        recipe = DeploymentRecipe(ris_count=33)
        with pytest.raises(InvalidConfigError):
            recipe.validate(SystemConfig())


class TestRxSampling:
    def test_unit_square_corners(self):
        cov = CoverageDisk(center_m=(100.0, 0.0), radius_m=25.0)
        np.testing.assert_allclose(disk_point(cov, 0.0, 0.37), [100.0, 0.0])
        np.testing.assert_allclose(disk_point(cov, 1.0, 0.0), [125.0, 0.0])

    def test_mean_distance_is_two_thirds_radius(self):
        cov = CoverageDisk(center_m=(0.0, 0.0), radius_m=25.0)
        rng = np.random.default_rng(123)
        pts = np.array([sample_rx(cov, rng) for _ in range(100_000)])
        mean_r = np.linalg.norm(pts, axis=1).mean()
        assert mean_r == pytest.approx(2.0 / 3.0 * 25.0, rel=0.01)


class TestSolveGeometry:
    def test_axis_aligned_link(self, system):
        dep = solve_geometry([0, 0], [[0, 35]], [100, 0], system)
        assert dep.r_0 == pytest.approx(100.0)
        assert dep.tx_depart_angle[0] == pytest.approx(0.0)
        assert dep.r_t[0] == pytest.approx(35.0)

    def test_distances_match_bruteforce(self, system):
        rng = np.random.default_rng(5)
        tx = rng.normal(size=2)
        ris = rng.normal(size=(6, 2)) * 50
        rx = rng.normal(size=2) + 80
        dep = solve_geometry(tx, ris, rx, system)
        assert dep.r_0 == pytest.approx(math.sqrt(sum((a - b) ** 2 for a, b in zip(tx, rx))))
        for k in range(6):
            assert dep.r_t[k] == pytest.approx(
                math.sqrt(sum((a - b) ** 2 for a, b in zip(tx, ris[k]))))
            assert dep.r_r[k] == pytest.approx(
                math.sqrt(sum((a - b) ** 2 for a, b in zip(rx, ris[k]))))

    def test_triangle_inequality(self, scenario, scene):
        rng = np.random.default_rng(17)
        for _ in range(50):
            rx = sample_rx(scenario.deployment.coverage, rng)
            dep = deployment_at(scenario, scene, rx)
            assert np.all(dep.r_t + dep.r_r >= dep.r_0 - 1e-9)

    def test_coincident_positions_rejected(self, system):
        with pytest.raises(DegenerateGeometryError):
            solve_geometry([0, 0], [[50, 0]], [0, 0], system)

    def test_json_roundtrip(self, scenario, scene):
        dep = deployment_at(scenario, scene, [95.0, -10.0])
        data = json.loads(dep.to_json())
        assert data["r_0"] == pytest.approx(dep.r_0)
        assert len(data["ris_xy"]) == 25

    @settings(max_examples=30, deadline=None)
    @given(y=st.floats(-24, 24), x=st.floats(76, 124))
    def test_coaltitude_panel_steps(self, scenario, scene, x, y):
        # Vertical steps vanish in-plane, so the panel reduces to its columns.
        dep = deployment_at(scenario, scene, [x, y])
        assert np.all(dep.ris_in_vert_step == 0)
        assert np.all(dep.ris_out_vert_step == 0)


class TestCollinearityKernel:
    def test_flag_matches_dirichlet_threshold(self, scenario, scene):
        """The angular test flags exactly the panels whose Tx steering
        correlates with the direct link above the kernel value at the
        resolution bound."""
        from risshaper.segmentation import collinear_filter

        n = scenario.system.n_tx
        # |D_N(delta)| at delta = pi/N, the inclusive flag boundary
        threshold = abs(math.sin(n * (math.pi / n) / 2)
                        / (n * math.sin((math.pi / n) / 2)))
        rng = np.random.default_rng(11)
        for _ in range(40):
            rx = sample_rx(scenario.deployment.coverage, rng)
            dep = deployment_at(scenario, scene, rx)
            flagged = set(collinear_filter(dep, n))
            direct = steering(n, dep.tx_depart_step[0])
            for k in range(dep.ris_count):
                corr = abs(np.vdot(direct, steering(n, dep.tx_depart_step[k + 1])))
                assert (corr >= threshold - 1e-9) == (k in flagged)


def test_coverage_extremes(scenario):
    positions, _ = place_ris_on_curve(scenario.system, scenario.deployment)
    r_r_max, r_0_min = coverage_extremes(positions, np.zeros(2),
                                         scenario.deployment.coverage)
    assert r_0_min == pytest.approx(75.0)
    assert r_r_max[0] == pytest.approx(38.0 + 25.0)  # boresight panel at [138, 0]


def test_default_ray_offsets_structure():
    assert default_ray_offsets(25) == (0, *range(-1, -13, -1), *range(1, 13))
