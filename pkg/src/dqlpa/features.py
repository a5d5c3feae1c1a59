"""Per-agent DQN inputs and the quantized power-level action set.

An agent is one BS-user link ``(n, k)``; links are numbered ``n * K + k``.
The state of an agent concatenates

1. its ``top_c`` strongest log-normalized interferer values,
2. the previous-slot rates of those interfering links,
3. their previous-slot powers divided by ``p_max``,
4. its own previous-slot rate and normalized power,

with zero padding when fewer than ``top_c`` interferers exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import Topology, dbm_to_watt
from .errors import ConfigError, DegenerateInputError


@dataclass(frozen=True)
class FeatureConfig:
    top_c: int = 16
    action_count: int = 10
    p_min: float = float(dbm_to_watt(5.0))  # W
    p_max: float = float(dbm_to_watt(38.0))  # W

    def __post_init__(self):
        if self.top_c < 1:
            raise ConfigError("top_c must be >= 1")
        if self.action_count < 3:
            raise ConfigError("action_count must be >= 3 (level spacing undefined otherwise)")
        if not 0 < self.p_min < self.p_max:
            raise ConfigError("need 0 < p_min < p_max")

    @property
    def state_dim(self) -> int:
        return 3 * self.top_c + 2


def build_action_set(cfg: FeatureConfig) -> np.ndarray:
    """Zero followed by ``|A| - 1`` geometrically spaced levels from p_min to p_max."""
    if cfg.action_count < 3:
        raise ConfigError("action_count must be >= 3")
    steps = cfg.action_count - 2
    ratio = cfg.p_max / cfg.p_min
    nonzero = cfg.p_min * ratio ** (np.arange(steps + 1) / steps)
    nonzero[-1] = cfg.p_max
    return np.concatenate([[0.0], nonzero])


@dataclass(frozen=True)
class InterfererIndex:
    """Candidate interfering links of every agent, in ascending link order.

    ``links[i]`` lists link ids, ``cells[i]`` their serving cells; the rows are
    the same length for a topology with uniform ``|D_n|``.
    """

    links: np.ndarray  # (L, M) int
    cells: np.ndarray  # (L, M) int
    users: int


@lru_cache(maxsize=64)
def _index_cached(neighbors: tuple[tuple[int, ...], ...], users: int) -> InterfererIndex:
    rows_links, rows_cells = [], []
    for n, nbrs in enumerate(neighbors):
        for k in range(users):
            cand = [(m, j) for m in sorted(set(nbrs) | {n}) for j in range(users)
                    if not (m == n and j == k)]
            rows_links.append([m * users + j for m, j in cand])
            rows_cells.append([m for m, _ in cand])
    lengths = {len(r) for r in rows_links}
    if len(lengths) != 1:
        raise ConfigError("interferer sets must have equal size for every cell")
    links = np.array(rows_links, dtype=int).reshape(len(rows_links), -1)
    cells = np.array(rows_cells, dtype=int).reshape(len(rows_cells), -1)
    return InterfererIndex(links=links, cells=cells, users=users)


def interferer_index(topo: Topology, users: int) -> InterfererIndex:
    return _index_cached(tuple(tuple(nb) for nb in topo.neighbors), users)


def sorted_interferers(g: np.ndarray, topo: Topology, index: InterfererIndex | None = None):
    """Log-normalized interferer values of every agent, sorted descending.

    Returns ``(links, values)`` of shape ``(L, M)``; ties keep ascending link id.
    """
    n_cells, _, users = g.shape
    index = interferer_index(topo, users) if index is None else index
    cell_of = np.repeat(np.arange(n_cells), users)
    user_of = np.tile(np.arange(users), n_cells)
    direct = g[cell_of, cell_of, user_of]
    if np.any(direct <= 0):
        raise DegenerateInputError("direct gain must be > 0 to normalize interferers")
    cross = g[index.cells, cell_of[:, None], user_of[:, None]]
    values = np.where(index.cells == cell_of[:, None], 1.0,
                      np.log2(1.0 + cross / direct[:, None]))
    order = np.argsort(-values, axis=1, kind="stable")
    return np.take_along_axis(index.links, order, 1), np.take_along_axis(values, order, 1)


def interferer_set(g: np.ndarray, agent: tuple[int, int], topo: Topology) -> list[tuple[tuple[int, int], float]]:
    """Sorted ``((cell, user), value)`` pairs for one agent."""
    n, k = agent
    users = g.shape[2]
    if g[n, n, k] <= 0:
        raise DegenerateInputError("direct gain must be > 0 to normalize interferers")
    links, values = sorted_interferers(g, topo)
    row = n * users + k
    return [((int(l) // users, int(l) % users), float(v)) for l, v in zip(links[row], values[row])]


def build_state(interferers, prev_rates, prev_powers, own_prev_rate: float, own_prev_power: float,
                cfg: FeatureConfig) -> np.ndarray:
    """Assemble one agent's state from its sorted interferer list.

    ``interferers`` is the output of :func:`interferer_set`; ``prev_rates`` and
    ``prev_powers`` are the full ``(N, K)`` slot ``t - 1`` records.
    """
    c = cfg.top_c
    state = np.zeros(cfg.state_dim)
    kept = interferers[:c]
    for i, ((m, j), value) in enumerate(kept):
        state[i] = value
        state[c + i] = prev_rates[m, j]
        state[2 * c + i] = prev_powers[m, j] / cfg.p_max
    state[3 * c] = own_prev_rate
    state[3 * c + 1] = own_prev_power / cfg.p_max
    return state


def build_states(g: np.ndarray, prev_rates: np.ndarray, prev_powers: np.ndarray, topo: Topology,
                 cfg: FeatureConfig, index: InterfererIndex | None = None) -> np.ndarray:
    """States of all ``N * K`` agents at once, shape ``(N * K, 3 * top_c + 2)``."""
    links, values = sorted_interferers(g, topo, index)
    c = cfg.top_c
    n_agents, m = links.shape
    keep = min(c, m)
    rates = np.asarray(prev_rates, dtype=float).reshape(-1)
    powers = np.asarray(prev_powers, dtype=float).reshape(-1) / cfg.p_max
    states = np.zeros((n_agents, cfg.state_dim))
    kept = links[:, :keep]
    states[:, :keep] = values[:, :keep]
    states[:, c:c + keep] = rates[kept]
    states[:, 2 * c:2 * c + keep] = powers[kept]
    states[:, 3 * c] = rates
    states[:, 3 * c + 1] = powers
    return states
