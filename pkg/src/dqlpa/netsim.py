"""SINR, link rates, sum-rate and the slot-by-slot environment."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import (ChannelConfig, SmallScaleState, Topology, UserLayout, assemble_gains,
                      init_fading, jakes_rho, jakes_step)
from .errors import DomainError


def compute_sinr(g: np.ndarray, p: np.ndarray, noise_power: float, topo: Topology) -> np.ndarray:
    """Downlink SINR of every link ``(n, k)``.

    Intra-cell interference is carried by the victim's own serving channel
    ``g[n, n, k]``; inter-cell interference is summed over the interferer set
    ``D_n`` only.
    """
    if noise_power <= 0:
        raise DomainError("noise power must be > 0")
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    n_cells = p.shape[0]
    idx = np.arange(n_cells)
    direct = g[idx, idx, :]  # (N, K)
    total = p.sum(axis=1)  # (N,)
    intra = direct * np.maximum(total[:, None] - p, 0.0)
    inter = np.einsum("nm,mnk,m->nk", topo.neighbor_mask.astype(float), g, total)
    return direct * p / (intra + inter + noise_power)


@dataclass
class RateReport:
    sinr: np.ndarray  # (N, K)
    rate: np.ndarray  # (N, K) bits/s/Hz
    sum_rate: float

    @classmethod
    def zeros(cls, shape) -> "RateReport":
        return cls(sinr=np.zeros(shape), rate=np.zeros(shape), sum_rate=0.0)


def compute_rates(sinr: np.ndarray) -> RateReport:
    sinr = np.asarray(sinr, dtype=float)
    rate = np.log2(1.0 + sinr)
    return RateReport(sinr=sinr, rate=rate, sum_rate=float(rate.sum()))


def sum_rate(g, p, noise_power, topo) -> float:
    return compute_rates(compute_sinr(g, p, noise_power, topo)).sum_rate


@dataclass
class EnvState:
    """One episode's environment at slot ``t``.

    ``prev_powers`` and ``prev_rates`` hold slot ``t - 1`` values and are
    zero-filled at ``t = 0``.
    """

    cfg: ChannelConfig
    topology: Topology
    layout: UserLayout
    fading: SmallScaleState
    gains: np.ndarray
    prev_powers: np.ndarray
    prev_rates: RateReport
    t: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.cfg.n_cells, self.cfg.users_per_cell


def reset_env(cfg: ChannelConfig, topo: Topology, layout: UserLayout,
              fading_rng: np.random.Generator) -> EnvState:
    """Start an episode: fresh i.i.d. small-scale fading over a fixed layout."""
    rho = jakes_rho(cfg.doppler, cfg.slot_period)
    fading = init_fading(layout.large_scale.shape, rho, fading_rng)
    shape = (cfg.n_cells, cfg.users_per_cell)
    return EnvState(cfg=cfg, topology=topo, layout=layout, fading=fading,
                    gains=assemble_gains(layout.large_scale, fading),
                    prev_powers=np.zeros(shape), prev_rates=RateReport.zeros(shape), t=0)


def env_step(env: EnvState, p: np.ndarray, rng: np.random.Generator | None,
             innovation: np.ndarray | None = None) -> tuple[RateReport, EnvState]:
    """Score ``p`` on the current gains, then advance the fading one slot.

    ``rng`` must be the fading stream, never the one used for choosing actions,
    so that every allocation scheme sees the same channel sample path.
    """
    p = np.asarray(p, dtype=float)
    report = compute_rates(compute_sinr(env.gains, p, env.cfg.noise_power, env.topology))
    fading = jakes_step(env.fading, rng, innovation=innovation)
    nxt = replace(env, fading=fading, gains=assemble_gains(env.layout.large_scale, fading),
                  prev_powers=p.copy(), prev_rates=report, t=env.t + 1)
    return report, nxt
