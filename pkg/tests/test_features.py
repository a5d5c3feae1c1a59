import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqlpa.channel import ChannelConfig, Topology, build_topology, watt_to_dbm
from dqlpa.errors import ConfigError, DegenerateInputError
from dqlpa.features import (FeatureConfig, build_action_set, build_state, build_states, interferer_set,
                            sorted_interferers)


def random_gains(n_cells, users, seed):
    return np.random.default_rng(seed).exponential(size=(n_cells, n_cells, users)) * 1e-9


class TestInterfererSet:
    def test_full_scale_cardinality(self):
        topo = build_topology(ChannelConfig(n_cells=25))
        g = random_gains(25, 4, 0)
        s = interferer_set(g, (3, 1), topo)
        assert len(s) == (18 + 1) * 4 - 1 == 75

    def test_intra_cell_entries_are_one(self):
        topo = build_topology(ChannelConfig(n_cells=25))
        g = random_gains(25, 4, 1)
        s = interferer_set(g, (5, 2), topo)
        intra = [v for (m, j), v in s if m == 5]
        assert len(intra) == 3 and all(v == 1.0 for v in intra)
        assert intra[0] == math.log2(1 + 1)

    def test_hand_value(self):
        topo = Topology(cell_centers=np.array([[0.0, 0], [2, 0]]), neighbors=[[1], [0]], lattice=np.eye(2) * 10)
        g = np.ones((2, 2, 1))
        g[1, 0, 0] = 3.0
        assert interferer_set(g, (0, 0), topo) == [((1, 0), 2.0)]

    def test_value_and_order_against_brute_force(self):
        cfg = ChannelConfig(n_cells=9, users_per_cell=3)
        topo = build_topology(cfg)
        g = random_gains(9, 3, 2)
        for n in range(9):
            for k in range(3):
                cand = []
                for m in [n] + topo.neighbors[n]:
                    for j in range(3):
                        if (m, j) == (n, k):
                            continue
                        v = 1.0 if m == n else math.log2(1 + g[m, n, k] / g[n, n, k])
                        cand.append(((m, j), v))
                cand.sort(key=lambda e: (-e[1], e[0]))
                got = interferer_set(g, (n, k), topo)
                assert [c for c, _ in got] == [c for c, _ in cand]
                np.testing.assert_allclose([v for _, v in got], [v for _, v in cand], rtol=1e-14)

    def test_ties_broken_by_link_index(self):
        topo = build_topology(ChannelConfig(n_cells=9, users_per_cell=2))
        g = np.ones((9, 9, 2))  # every neighbor value equals log2(2) = 1 as well
        links = [c for c, _ in interferer_set(g, (4, 0), topo)]
        assert links == sorted(links)

    def test_zero_direct_gain(self):
        topo = build_topology(ChannelConfig(n_cells=9, users_per_cell=2))
        g = random_gains(9, 2, 3)
        g[2, 2, 1] = 0.0
        with pytest.raises(DegenerateInputError):
            interferer_set(g, (2, 1), topo)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_sorted_non_increasing_nonnegative(self, seed):
        topo = build_topology(ChannelConfig(n_cells=9, users_per_cell=2))
        _, values = sorted_interferers(random_gains(9, 2, seed), topo)
        assert np.all(values >= 0)
        assert np.all(np.diff(values, axis=1) <= 0)


class TestState:
    cfg = FeatureConfig()

    def test_full_scale_length(self):
        assert self.cfg.state_dim == 50

    def test_padding(self):
        cfg = FeatureConfig(top_c=4)
        inter = [((0, 1), 0.9), ((1, 0), 0.5), ((2, 0), 0.1)]
        rates = np.arange(6, dtype=float).reshape(3, 2)
        powers = np.full((3, 2), cfg.p_max / 2)
        s = build_state(inter, rates, powers, 1.5, cfg.p_max, cfg)
        assert len(s) == 14
        assert s[3] == 0 and s[4 + 3] == 0 and s[8 + 3] == 0
        np.testing.assert_array_equal(s[:3], [0.9, 0.5, 0.1])
        np.testing.assert_array_equal(s[4:7], [1.0, 2.0, 4.0])
        np.testing.assert_allclose(s[8:11], 0.5)
        assert s[-2] == 1.5 and s[-1] == 1.0

    def test_vectorized_matches_single(self):
        topo = build_topology(ChannelConfig(n_cells=9, users_per_cell=2))
        rng = np.random.default_rng(4)
        g = random_gains(9, 2, 4)
        rates = rng.random((9, 2)) * 5
        powers = rng.random((9, 2)) * self.cfg.p_max
        states = build_states(g, rates, powers, topo, self.cfg)
        assert states.shape == (18, 50)
        for n in range(9):
            for k in range(2):
                single = build_state(interferer_set(g, (n, k), topo), rates, powers, rates[n, k], powers[n, k],
                                     self.cfg)
                np.testing.assert_array_equal(states[n * 2 + k], single)

    @pytest.mark.parametrize("n_cells, users", [(9, 1), (9, 6), (25, 4), (49, 2)])
    def test_length_fixed_across_scenarios(self, n_cells, users):
        topo = build_topology(ChannelConfig(n_cells=n_cells, users_per_cell=users))
        states = build_states(random_gains(n_cells, users, 0), np.zeros((n_cells, users)),
                              np.zeros((n_cells, users)), topo, self.cfg)
        assert states.shape == (n_cells * users, 50)

    def test_k1_small_network_padded(self):
        topo = build_topology(ChannelConfig(n_cells=9, users_per_cell=1))
        states = build_states(random_gains(9, 1, 0), np.ones((9, 1)), np.ones((9, 1)), topo, self.cfg)
        # 8 interferers, so slots 8..15 of every block stay zero
        assert np.all(states[:, 8:16] == 0) and np.all(states[:, 24:32] == 0) and np.all(states[:, 40:48] == 0)


class TestActionSet:
    def test_full_scale_levels_in_dbm(self):
        levels = build_action_set(FeatureConfig())
        assert len(levels) == 10 and levels[0] == 0.0
        np.testing.assert_allclose(watt_to_dbm(levels[1:]), 5 + np.arange(9) * 33 / 8, atol=1e-9)
        assert levels[1] == pytest.approx(3.162e-3, rel=1e-3)
        assert levels[-1] == pytest.approx(6.310, rel=1e-3)

    def test_three_levels(self):
        cfg = FeatureConfig(action_count=3)
        np.testing.assert_array_equal(build_action_set(cfg), [0.0, cfg.p_min, cfg.p_max])

    def test_too_few_levels(self):
        with pytest.raises(ConfigError):
            FeatureConfig(action_count=2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(3, 40), st.floats(1e-4, 1.0), st.floats(1.5, 1e4))
    def test_geometric(self, count, p_min, ratio):
        cfg = FeatureConfig(action_count=count, p_min=p_min, p_max=p_min * ratio)
        levels = build_action_set(cfg)
        assert np.all(np.diff(levels) > 0)
        assert levels[1] == cfg.p_min and levels[-1] == cfg.p_max
        r = levels[2:] / levels[1:-1]
        np.testing.assert_allclose(r, ratio ** (1 / (count - 2)), rtol=1e-9)
