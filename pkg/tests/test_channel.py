import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import deployment_at
from risshaper import channel as ch
from risshaper import risdesign as rd
from risshaper.config import SystemConfig
from risshaper.errors import InvalidConfigError
from risshaper.geometry import solve_geometry
from risshaper.segmentation import greedy_segment


class TestSteering:
    def test_flat_vector(self):
        np.testing.assert_allclose(ch.steering(4, 0.0), np.full(4, 0.5))

    def test_alternating_vector(self):
        np.testing.assert_allclose(ch.steering(2, math.pi),
                                   np.array([1, -1]) / math.sqrt(2), atol=1e-15)

    def test_dft_grid_orthogonality(self):
        a = ch.steering(32, 2 * math.pi * 3 / 32)
        b = ch.steering(32, 2 * math.pi * 7 / 32)
        assert abs(np.vdot(a, b)) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 128), step=st.floats(-10, 10))
    def test_unit_norm(self, n, step):
        assert np.linalg.norm(ch.steering(n, step)) == pytest.approx(1.0, abs=1e-12)


class TestUpaSteering:
    def test_single_row_reduces_to_ula(self):
        np.testing.assert_allclose(ch.upa_steering(1, 8, 0.3, 0.7), ch.steering(8, 0.7))

    def test_two_by_two_flat(self):
        np.testing.assert_allclose(ch.upa_steering(2, 2, 0.0, 0.0), np.full(4, 0.5))

    @settings(max_examples=30, deadline=None)
    @given(v=st.floats(-3, 3), h=st.floats(-3, 3))
    def test_unit_norm(self, v, h):
        assert np.linalg.norm(ch.upa_steering(3, 5, v, h)) == pytest.approx(1.0, abs=1e-12)


def _tiny_system(**kw) -> SystemConfig:
    base = dict(n_tx=8, n_rx=4, rf_tx=4, ris_rows=2, link_quality_direct=1.0)
    base.update(kw)
    return SystemConfig(**base)


def _tiny_link(system):
    panels = [rd.RisPanel(rows=2, cols=6, bits=system.bits)]
    dep = solve_geometry([0, 0], [[30.0, 20.0]], [90.0, -4.0], system)
    return dep, panels


class TestComponentChannels:
    def test_pure_los_direct_is_rank_one(self):
        system = _tiny_system()
        dep, panels = _tiny_link(system)
        real = ch.draw_realization(dep, panels, system)
        h_d = ch.component_matrix(real.direct, system.n_rx, system.n_tx)
        sv = np.linalg.svd(h_d, compute_uv=False)
        assert sv[1] < 1e-14 * sv[0]
        g0 = ch.pathloss_amplitude(dep.r_0, system.wavelength_m)
        expect = math.sqrt(system.n_tx * system.n_rx) * g0  # quality 1 here
        assert np.linalg.norm(h_d) == pytest.approx(expect, rel=1e-12)

    def test_zero_rician_factor_energy(self):
        # kappa -> 0: pure scatter; E||H||_F^2 = N_a*N_b*g^2 within 5%.
        system = _tiny_system(rician_db=-300.0, nlos_paths=3)
        dep, panels = _tiny_link(system)
        rng = np.random.default_rng(3)
        energies = []
        for _ in range(10_000):
            real = ch.draw_realization(dep, panels, system, rng=rng)
            h_d = ch.component_matrix(real.direct, system.n_rx, system.n_tx)
            energies.append(np.linalg.norm(h_d) ** 2)
        g0 = ch.pathloss_amplitude(dep.r_0, system.wavelength_m)
        expect = system.n_tx * system.n_rx * g0 ** 2
        assert np.mean(energies) == pytest.approx(expect, rel=0.05)

    def test_reference_rician_power_ratio(self):
        # 13.5 dB factor: mean LoS power / mean scatter power = 10^1.35.
        kappa_db = 13.5
        system = _tiny_system(rician_db=kappa_db, nlos_paths=3)
        dep, panels = _tiny_link(system)
        rng = np.random.default_rng(4)
        los_p, nlos_p = [], []
        for _ in range(10_000):
            real = ch.draw_realization(dep, panels, system, rng=rng)
            los_p.append(abs(real.direct.amps[0]) ** 2)
            nlos_p.append(np.sum(np.abs(real.direct.amps[1:]) ** 2))
        ratio = np.mean(los_p) / np.mean(nlos_p)
        assert ratio == pytest.approx(10 ** (kappa_db / 10), rel=0.10)

    def test_scatterless_finite_rician_rejected(self):
        system = _tiny_system(rician_db=10.0, nlos_paths=0)
        dep, panels = _tiny_link(system)
        with pytest.raises(InvalidConfigError):
            ch.draw_realization(dep, panels, system, rng=np.random.default_rng(0))

    def test_tx_link_energy_bookkeeping(self):
        # E||H_T||_F^2 = N_T*N_S*g^2*(I^2*kappa + 1)/(kappa + 1) within 5%.
        system = _tiny_system(rician_db=6.0, nlos_paths=3, link_quality_tx=0.5)
        dep, panels = _tiny_link(system)
        rng = np.random.default_rng(9)
        energies = []
        for _ in range(10_000):
            real = ch.draw_realization(dep, panels, system, rng=rng)
            h_t = ch.component_matrix(real.tx_links[0], panels[0].elements,
                                      system.n_tx, row_panel=panels[0])
            energies.append(np.linalg.norm(h_t) ** 2)
        kappa = 10 ** 0.6
        g_t = ch.pathloss_amplitude(dep.r_t[0], system.wavelength_m)
        expect = (system.n_tx * panels[0].elements * g_t ** 2
                  * (0.25 * kappa + 1) / (kappa + 1))
        assert np.mean(energies) == pytest.approx(expect, rel=0.05)


class TestCompose:
    def test_all_panels_off_gives_direct_only(self, scenario, scene):
        _, _, _, _, panels = scene
        dep = deployment_at(scenario, scene, [97.0, 6.0])
        off = rd.RisDesign(strategy="off", bits=4, active_set=(),
                           panels=[rd.design_off(p) for p in panels])
        real = ch.draw_realization(dep, panels, scenario.system)
        h = ch.compose(real, off)
        h_d = ch.component_matrix(real.direct, scenario.system.n_rx, scenario.system.n_tx)
        np.testing.assert_allclose(h, h_d, atol=1e-18)

    def test_single_panel_optimal_residual(self, scenario, scene):
        # With one gain-maximized panel, H minus the direct rank-one term has
        # top singular value |alpha_1| up to steering cross-terms (<1%).
        _, _, _, _, panels = scene
        dep = deployment_at(scenario, scene, [108.0, 9.0])
        seg = greedy_segment(dep, 2, scenario.system)
        design = rd.design_reflections(dep, panels, seg.selected, "mpg", scenario.system)
        gains = ch.cascade_gains(dep, panels, design, scenario.system)
        real = ch.draw_realization(dep, panels, scenario.system)
        h = ch.compose(real, design)
        a_r = ch.steering(scenario.system.n_rx, dep.rx_arrive_step[0])
        a_t = ch.steering(scenario.system.n_tx, dep.tx_depart_step[0])
        resid = h - gains[0] * np.outer(a_r, a_t.conj())
        k = seg.selected[0]
        sv = np.linalg.svd(resid, compute_uv=False)
        assert sv[0] == pytest.approx(abs(gains[k + 1]), rel=0.01)

    def test_los_compose_matches_gain_sum(self, scenario, scene):
        # Path-sum assembly equals the analytic gain expansion exactly.
        _, _, _, _, panels = scene
        dep = deployment_at(scenario, scene, [91.0, -13.0])
        seg = greedy_segment(dep, 5, scenario.system)
        design = rd.design_reflections(dep, panels, seg.selected, "hpg", scenario.system)
        gains = ch.cascade_gains(dep, panels, design, scenario.system)
        real = ch.draw_realization(dep, panels, scenario.system)
        h = ch.compose(real, design)
        a_r = ch.steering_matrix(scenario.system.n_rx, dep.rx_arrive_step)
        a_t = ch.steering_matrix(scenario.system.n_tx, dep.tx_depart_step)
        h_ref = (a_r * gains) @ a_t.conj().T
        assert np.linalg.norm(h - h_ref) <= 1e-10 * np.linalg.norm(h_ref)

    @pytest.mark.parametrize("rician_db", [None, 8.0])
    def test_dense_assembly_agrees_with_path_sum(self, scenario, scene, rician_db):
        _, _, _, _, panels = scene
        system = dataclasses.replace(scenario.system, rician_db=rician_db)
        dep = deployment_at(scenario, scene, [103.0, 14.0])
        seg = greedy_segment(dep, 4, system)
        design = rd.design_reflections(dep, panels, seg.selected, "mpg", system)
        real = ch.draw_realization(dep, panels, system, rng=np.random.default_rng(2))
        h_fast = ch.compose(real, design)
        h_dense = ch.compose_dense(real, design)
        assert np.linalg.norm(h_fast - h_dense) <= 1e-10 * np.linalg.norm(h_dense)

    def test_reflection_linearity(self):
        # The cascade is linear in the reflection matrix: summing two phase
        # states' unit diagonals equals summing their cascade terms.
        system = _tiny_system(rician_db=5.0, nlos_paths=2)
        dep, panels = _tiny_link(system)
        real = ch.draw_realization(dep, panels, system, rng=np.random.default_rng(8))
        rng = np.random.default_rng(12)
        d1 = rd.design_rpg(panels[0], dep.reflection_step[0], rng)
        d2 = rd.design_rpg(panels[0], dep.reflection_step[0], rng)

        def cascade(phase_diag):
            h_t = ch.component_matrix(real.tx_links[0], panels[0].elements,
                                      system.n_tx, row_panel=panels[0])
            h_r = ch.component_matrix(real.rx_links[0], system.n_rx,
                                      panels[0].elements, col_panel=panels[0])
            gamma = np.tile(phase_diag, panels[0].rows)
            return h_r @ (gamma[:, None] * h_t)

        lhs = cascade(np.exp(1j * d1.phases) + np.exp(1j * d2.phases))
        rhs = cascade(np.exp(1j * d1.phases)) + cascade(np.exp(1j * d2.phases))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-25)

    def test_sorted_singulars_match_gain_magnitudes(self, scenario, scene):
        # Orthogonally-placed panels: spectrum ~ sorted cascade gains.
        _, _, _, _, panels = scene
        dep = deployment_at(scenario, scene, [111.0, 3.5])
        seg = greedy_segment(dep, 4, scenario.system)
        design = rd.design_reflections(dep, panels, seg.selected, "hpg", scenario.system)
        gains = ch.cascade_gains(dep, panels, design, scenario.system)
        real = ch.draw_realization(dep, panels, scenario.system)
        sv = np.linalg.svd(ch.compose(real, design), compute_uv=False)
        idx = [0] + [k + 1 for k in seg.selected]
        expect = np.sort(np.abs(gains[idx]))[::-1]
        np.testing.assert_allclose(sv[:4], expect, rtol=0.1)


def test_export_import_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(8, 32)) + 1j * rng.normal(size=(8, 32))
    path = tmp_path / "h.bin"
    ch.export_matrix(path, m)
    np.testing.assert_array_equal(ch.import_matrix(path), m)
    assert (tmp_path / "h.bin.json").exists()
