import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0

from dqlpa.channel import (ChannelConfig, SmallScaleState, assemble_gains, bessel_j0, build_topology,
                           dbm_to_watt, drop_users, init_fading, jakes_rho, jakes_step, pathloss,
                           wrapped_displacement)
from dqlpa.errors import ConfigError, DomainError


class TestTopology:
    def test_full_scale_grid_has_18_neighbors(self):
        topo = build_topology(ChannelConfig(n_cells=25, neighbor_cap=18))
        assert all(len(nb) == 18 for nb in topo.neighbors)

    def test_full_scale_grid_neighbors_are_two_hex_tiers(self):
        cfg = ChannelConfig(n_cells=25)
        topo = build_topology(cfg)
        isd = 2 * cfg.r_max
        for n, nbrs in enumerate(topo.neighbors):
            d = topo.wrapped_distance(topo.cell_centers[nbrs], topo.cell_centers[n]) / isd
            np.testing.assert_allclose(np.sort(d)[:6], 1.0)
            assert np.all(d <= 2.0 + 1e-9)
            assert n not in nbrs

    def test_neighbor_cap_by_cell_count(self):
        assert [len(nb) for nb in build_topology(ChannelConfig(n_cells=2, grid_dims=(2, 1))).neighbors] == [1, 1]
        assert all(len(nb) == 8 for nb in build_topology(ChannelConfig(n_cells=9)).neighbors)

    def test_neighbors_sorted_by_distance_then_index(self):
        topo = build_topology(ChannelConfig(n_cells=49))
        for n, nbrs in enumerate(topo.neighbors):
            d = np.round(topo.wrapped_distance(topo.cell_centers[nbrs], topo.cell_centers[n]), 9)
            keys = list(zip(d, nbrs))
            assert keys == sorted(keys)

    def test_too_few_cells(self):
        with pytest.raises(ConfigError):
            ChannelConfig(n_cells=1)

    def test_non_square_needs_dims(self):
        with pytest.raises(ConfigError):
            ChannelConfig(n_cells=10)
        assert ChannelConfig(n_cells=10, grid_dims=(5, 2)).dims() == (5, 2)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=4, max_size=4))
    def test_wrapped_distance_symmetric(self, xy):
        topo = build_topology(ChannelConfig(n_cells=25))
        a, b = np.array(xy[:2]), np.array(xy[2:])
        assert topo.wrapped_distance(a, b) == pytest.approx(topo.wrapped_distance(b, a), abs=1e-12)

    def test_wrapped_displacement_periodic(self):
        topo = build_topology(ChannelConfig(n_cells=25))
        a, b = np.array([0.3, 0.7]), np.array([4.1, -2.2])
        shifted = a + 2 * topo.lattice[0] - topo.lattice[1]
        np.testing.assert_allclose(wrapped_displacement(shifted, b, topo.lattice),
                                   wrapped_displacement(a, b, topo.lattice), atol=1e-12)


class TestPathloss:
    def test_values(self):
        assert pathloss(1.0) == pytest.approx(10 ** -12.09, rel=1e-12)
        assert pathloss(1.0) == pytest.approx(8.128e-13, rel=1e-4)
        assert pathloss(0.1) == pytest.approx(4.677e-9, rel=1e-4)
        loss_db = -10 * math.log10(pathloss(1.0, 10 ** 0.8))
        assert loss_db == pytest.approx(128.9, abs=1e-9)

    def test_decreasing_in_distance(self):
        d = np.linspace(0.01, 5, 200)
        assert np.all(np.diff(pathloss(d)) < 0)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_domain(self, d):
        with pytest.raises(DomainError):
            pathloss(d)

    def test_noise_conversion(self):
        assert dbm_to_watt(-114) == pytest.approx(3.981e-15, rel=1e-4)


class TestUserDrop:
    def test_serving_distance_in_annulus(self):
        cfg = ChannelConfig(n_cells=25)
        topo = build_topology(cfg)
        for seed in range(5):
            layout = drop_users(topo, cfg, np.random.default_rng(seed))
            idx = np.arange(cfg.n_cells)
            serving = layout.distances[idx, idx, :]
            assert np.all(serving >= cfg.r_min) and np.all(serving <= cfg.r_max)
            direct = np.linalg.norm(layout.positions - topo.cell_centers[:, None, :], axis=-1)
            np.testing.assert_allclose(serving, direct, atol=1e-12)
            assert np.all(layout.large_scale > 0)

    def test_area_uniform_radius(self):
        cfg = ChannelConfig(n_cells=4, users_per_cell=5000)
        topo = build_topology(cfg)
        layout = drop_users(topo, cfg, np.random.default_rng(0))
        r = layout.distances[np.arange(4), np.arange(4), :].ravel()
        # CDF of an area-uniform annulus radius
        frac = np.mean(r <= 0.5)
        expected = (0.5**2 - cfg.r_min**2) / (cfg.r_max**2 - cfg.r_min**2)
        assert frac == pytest.approx(expected, abs=0.01)

    def test_shadowing_std(self):
        cfg = ChannelConfig(n_cells=4, users_per_cell=6250)  # 4 * 4 * 6250 = 1e5 draws
        layout = drop_users(build_topology(cfg), cfg, np.random.default_rng(11))
        db = 10 * np.log10(layout.shadowing)
        assert db.size == 100_000
        assert np.std(db) == pytest.approx(8.0, abs=0.2)

    def test_zero_shadowing(self):
        cfg = ChannelConfig(n_cells=9, shadow_std=0.0)
        layout = drop_users(build_topology(cfg), cfg, np.random.default_rng(0))
        assert np.all(layout.shadowing == 1.0)

    def test_seed_determinism(self):
        cfg = ChannelConfig(n_cells=9, users_per_cell=2)
        topo = build_topology(cfg)
        a = drop_users(topo, cfg, np.random.default_rng(3), np.random.default_rng(4))
        b = drop_users(topo, cfg, np.random.default_rng(3), np.random.default_rng(4))
        assert a.large_scale.tobytes() == b.large_scale.tobytes()
        assert a.positions.tobytes() == b.positions.tobytes()


class TestJakes:
    def test_bessel_matches_scipy(self):
        for x in np.linspace(0, 10, 41):
            assert bessel_j0(x) == pytest.approx(j0(x), abs=1e-9)

    def test_rho_reference_value(self):
        rho = jakes_rho(10.0, 0.02)
        assert rho == pytest.approx(0.64251, abs=1e-5)
        assert rho == pytest.approx(j0(2 * math.pi * 0.2), abs=1e-9)

    def test_zero_innovation(self):
        state = init_fading((3, 3, 2), 0.6, np.random.default_rng(0))
        nxt = jakes_step(state, None, innovation=np.zeros_like(state.h))
        np.testing.assert_array_equal(nxt.h, 0.6 * state.h)

    def test_rho_one_rejected(self):
        with pytest.raises(DomainError):
            SmallScaleState(h=np.ones(1, complex), rho=1.0)
        with pytest.raises(ConfigError):
            ChannelConfig(doppler=0.0)

    def test_lag_one_autocorrelation_and_variance(self):
        rho = jakes_rho(10.0, 0.02)
        rng = np.random.default_rng(5)
        state = init_fading((1,), rho, rng)
        re = np.empty(100_000)
        power = np.empty(100_000)
        for t in range(100_000):
            re[t] = state.h[0].real
            power[t] = abs(state.h[0]) ** 2
            state = jakes_step(state, rng)
        x = re - re.mean()
        acf = np.dot(x[:-1], x[1:]) / np.dot(x, x)
        assert acf == pytest.approx(rho, abs=0.01)
        assert power.mean() == pytest.approx(1.0, abs=0.03)

    def test_marginal_is_unit_complex_gaussian(self):
        state = init_fading((200_000,), 0.5, np.random.default_rng(1))
        state = jakes_step(state, np.random.default_rng(2))
        h = state.h
        assert abs(h.mean()) < 0.01
        assert np.var(h.real) == pytest.approx(0.5, abs=0.01)
        assert np.var(h.imag) == pytest.approx(0.5, abs=0.01)


class TestGains:
    def test_examples(self):
        assert assemble_gains(np.array([2.0]), np.array([1 + 0j]))[0] == 2.0
        assert assemble_gains(np.array([2.0]), np.array([0j]))[0] == 0.0
        h = np.array([math.sqrt(0.5) + 0j])
        assert assemble_gains(np.array([8.128e-13]), h)[0] == pytest.approx(4.064e-13, rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-15, 1e-3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 10))
    def test_scaling(self, beta, re, im, c):
        h = np.array([complex(re, im)])
        g = assemble_gains(np.array([beta]), h)[0]
        assert g >= 0
        assert assemble_gains(np.array([c * beta]), h)[0] == pytest.approx(c * g, rel=1e-12, abs=1e-300)
        assert assemble_gains(np.array([beta]), c * h)[0] == pytest.approx(c * c * g, rel=1e-12, abs=1e-300)
