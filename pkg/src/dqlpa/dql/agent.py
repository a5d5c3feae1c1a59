"""Exploration and learning-rate schedules, TD targets, and the training/execution loops.

Training is centralized: every link ``(n, k)`` acts with the one shared
network, all agents' experiences go into a single replay memory, and every
agent receives the global sum-rate of the slot as its reward.  Execution is
distributed: each agent greedily maps its own local state to a power level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..channel import ChannelConfig, build_topology, drop_users
from ..errors import ConfigError, TrainingError
from ..features import FeatureConfig, build_action_set, build_states, interferer_index
from ..netsim import EnvState, RateReport, env_step, reset_env
from ..rng import substream
from .network import QNetwork
from .replay import Batch, ReplayMemory

log = logging.getLogger(__name__)

TRAIN_PHASE = 0


@dataclass
class TrainConfig:
    gamma: float = 0.0
    lr_initial: float = 1e-3
    lr_final: float = 1e-4
    eps_initial: float = 0.2
    eps_final: float = 1e-4
    episodes_observe: int = 100
    episodes_explore: int = 9900
    slots_per_episode: int = 50
    train_interval: int = 10
    batch_size: int = 256
    memory_size: int = 50000
    hidden: tuple[int, ...] = (128, 64)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        for name in ("lr_initial", "lr_final", "eps_initial", "eps_final"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.episodes_observe < 0 or self.episodes_explore < 1:
            raise ConfigError("need episodes_observe >= 0 and episodes_explore >= 1")
        for name in ("slots_per_episode", "train_interval", "batch_size", "memory_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def episodes(self) -> int:
        return self.episodes_observe + self.episodes_explore


def schedules(episode: int, slot: int, cfg: TrainConfig) -> tuple[float, float]:
    """Learning rate and exploration probability for a given training slot.

    Observation episodes act uniformly at random (epsilon = 1).  Afterwards both
    quantities decay geometrically per slot, ``x0 * (xf / x0) ** (tau / tau_max)``,
    hitting their final values on the last exploration slot.
    """
    if episode < cfg.episodes_observe:
        return cfg.lr_initial, 1.0
    tau = (episode - cfg.episodes_observe) * cfg.slots_per_episode + slot
    tau_max = cfg.episodes_explore * cfg.slots_per_episode - 1
    frac = 1.0 if tau_max == 0 else min(tau / tau_max, 1.0)
    lr = cfg.lr_initial * (cfg.lr_final / cfg.lr_initial) ** frac
    eps = cfg.eps_initial * (cfg.eps_final / cfg.eps_initial) ** frac
    return lr, eps


def act_eps_greedy(q: np.ndarray, eps: float, rng: np.random.Generator):
    """Uniform action with probability ``eps``, otherwise argmax (lowest index on ties).

    ``q`` may be one agent's Q vector or a ``(agents, actions)`` matrix.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    q2 = np.atleast_2d(q)
    greedy = np.argmax(q2, axis=1)
    if eps <= 0:
        actions = greedy
    else:
        explore = rng.random(len(q2)) < eps
        random_actions = rng.integers(q2.shape[1], size=len(q2))
        actions = np.where(explore, random_actions, greedy)
    return int(actions[0]) if single else actions


def td_target(batch: Batch, gamma: float, net: QNetwork) -> np.ndarray:
    """``r + gamma * max_a' Q(s', a')`` with the current network; terminal slots use ``r``."""
    y = np.array(batch.rewards, dtype=float)
    if gamma == 0:
        return y
    missing = ~batch.has_next & ~batch.terminal
    if np.any(missing):
        raise ValueError("non-terminal experience without next_state while gamma > 0")
    if np.any(batch.has_next):
        q_next = net.forward(batch.next_states[batch.has_next])
        y[batch.has_next] += gamma * q_next.max(axis=1)
    return y


def train_step(net: QNetwork, batch: Batch, lr: float, gamma: float = 0.0) -> float:
    """One Adam update on the mean squared TD error of ``batch``; returns the loss."""
    targets = td_target(batch, gamma, net)
    loss, grads = net.loss_and_grads(batch.states, batch.actions, targets)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss}")
    net.apply_gradients(grads, lr)
    return loss


@dataclass
class TrainResult:
    net: QNetwork
    n_links: int
    sum_rate: list[float] = field(default_factory=list)  # per episode, mean over its slots
    losses: list[float] = field(default_factory=list)

    @property
    def avg_rate(self) -> list[float]:
        return [s / self.n_links for s in self.sum_rate]


def make_network(feature_cfg: FeatureConfig, train_cfg: TrainConfig, rng) -> QNetwork:
    dims = [feature_cfg.state_dim, *train_cfg.hidden, feature_cfg.action_count]
    return QNetwork(dims, rng)


def centralized_train(channel_cfg: ChannelConfig, feature_cfg: FeatureConfig, train_cfg: TrainConfig,
                      seed: int, net: QNetwork | None = None,
                      progress: Callable[[int, float], None] | None = None) -> TrainResult:
    """Train one shared Q network from the experiences of all links.

    The user layout and shadowing are redrawn at every episode.  Returns the
    network and the per-episode average rate (sum-rate / links, averaged over
    the episode's slots).
    """
    topo = build_topology(channel_cfg)
    index = interferer_index(topo, channel_cfg.users_per_cell)
    levels = build_action_set(feature_cfg)
    n_cells, users = channel_cfg.n_cells, channel_cfg.users_per_cell
    n_links = n_cells * users
    net = make_network(feature_cfg, train_cfg, substream(seed, "init")) if net is None else net
    if net.input_dim != feature_cfg.state_dim or net.output_dim != feature_cfg.action_count:
        raise ConfigError("network dimensions do not match the feature configuration")
    replay = ReplayMemory(train_cfg.memory_size, feature_cfg.state_dim)
    action_rng = substream(seed, "action", TRAIN_PHASE)
    replay_rng = substream(seed, "replay", TRAIN_PHASE)
    gamma = train_cfg.gamma
    result = TrainResult(net=net, n_links=n_links)

    for episode in range(train_cfg.episodes):
        layout = drop_users(topo, channel_cfg, substream(seed, "placement", TRAIN_PHASE, episode),
                            substream(seed, "shadowing", TRAIN_PHASE, episode))
        fading_rng = substream(seed, "fading", TRAIN_PHASE, episode)
        env = reset_env(channel_cfg, topo, layout, fading_rng)
        exploring = episode >= train_cfg.episodes_observe
        pending = None
        total = 0.0
        for slot in range(train_cfg.slots_per_episode):
            lr, eps = schedules(episode, slot, train_cfg)
            states = build_states(env.gains, env.prev_rates.rate, env.prev_powers, topo, feature_cfg, index)
            if pending is not None:
                replay.push_many(pending[0], pending[1], pending[2], next_states=states)
            actions = act_eps_greedy(net.forward(states), eps, action_rng)
            report, env = env_step(env, levels[actions].reshape(n_cells, users), fading_rng)
            total += report.sum_rate
            if gamma == 0:
                replay.push_many(states, actions, report.sum_rate)
            else:
                pending = (states, actions, report.sum_rate)
            if exploring:
                tau = (episode - train_cfg.episodes_observe) * train_cfg.slots_per_episode + slot
                if (tau + 1) % train_cfg.train_interval == 0 and len(replay) >= train_cfg.batch_size:
                    batch = replay.sample(train_cfg.batch_size, replay_rng)
                    result.losses.append(train_step(net, batch, lr, gamma))
        if pending is not None:
            replay.push_many(pending[0], pending[1], pending[2], terminal=True)
        result.sum_rate.append(total / train_cfg.slots_per_episode)
        avg = result.sum_rate[-1] / n_links
        if progress is not None:
            progress(episode, avg)
        if episode % 100 == 0:
            log.debug("episode %d avg rate %.4f", episode, avg)
    return result


def greedy_policy(net: QNetwork, feature_cfg: FeatureConfig, levels: np.ndarray | None = None):
    """Return ``policy(env) -> powers`` that lets every agent act greedily on its own state."""
    levels = build_action_set(feature_cfg) if levels is None else levels

    def policy(env: EnvState) -> np.ndarray:
        n_cells, users = env.shape
        index = interferer_index(env.topology, users)
        states = build_states(env.gains, env.prev_rates.rate, env.prev_powers, env.topology,
                              feature_cfg, index)
        actions = np.argmax(net.forward(states), axis=1)
        return levels[actions].reshape(n_cells, users)

    return policy


def run_policy(env: EnvState, slots: int, policy: Callable[[EnvState], np.ndarray],
               fading_rng: np.random.Generator) -> tuple[list[RateReport], EnvState]:
    reports = []
    for _ in range(slots):
        report, env = env_step(env, policy(env), fading_rng)
        reports.append(report)
    return reports, env


def distributed_execute(net: QNetwork, env: EnvState, slots: int, feature_cfg: FeatureConfig,
                        fading_rng: np.random.Generator) -> list[RateReport]:
    """Run the frozen shared policy on every link for ``slots`` slots (no learning)."""
    reports, _ = run_policy(env, slots, greedy_policy(net, feature_cfg), fading_rng)
    return reports
