"""Cellular layout, large-scale attenuation and time-correlated Rayleigh fading.

Array conventions used throughout the package (N cells, K users per cell):

* cell ``n`` hosts one base station (BS ``n``) and users ``(n, k)``;
* gain-like arrays are indexed ``[bs, cell, user]``, shape ``(N, N, K)``, so
  ``g[m, n, k]`` is the gain from BS ``m`` to user ``k`` of cell ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


@dataclass
class ChannelConfig:
    n_cells: int = 25
    users_per_cell: int = 4
    r_min: float = 0.01  # km
    r_max: float = 1.0  # km, half the inter-site distance
    doppler: float = 10.0  # Hz
    slot_period: float = 0.02  # s
    shadow_std: float = 8.0  # dB
    pathloss_fixed: float = 120.9  # dB
    pathloss_slope: float = 37.6  # dB / decade
    noise_power: float = float(dbm_to_watt(-114.0))  # W
    neighbor_cap: int = 18
    grid_dims: tuple[int, int] | None = None  # (cols, rows); defaults to a square grid

    def __post_init__(self):
        if self.grid_dims is not None:
            self.grid_dims = tuple(int(v) for v in self.grid_dims)
        self.validate()

    def validate(self):
        if self.n_cells < 2:
            raise ConfigError(f"need at least 2 cells, got {self.n_cells}")
        if self.users_per_cell < 1:
            raise ConfigError("users_per_cell must be >= 1")
        if not 0 < self.r_min < self.r_max:
            raise ConfigError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.doppler < 0:
            raise ConfigError("doppler must be >= 0")
        if self.slot_period <= 0:
            raise ConfigError("slot_period must be > 0")
        if self.shadow_std < 0:
            raise ConfigError("shadow_std must be >= 0")
        if self.noise_power <= 0:
            raise ConfigError("noise_power must be > 0")
        if self.neighbor_cap < 0:
            raise ConfigError("neighbor_cap must be >= 0")
        self.dims()
        if jakes_rho(self.doppler, self.slot_period) >= 1.0:
            raise ConfigError("fading correlation must be < 1 (doppler * slot_period too small)")

    def dims(self) -> tuple[int, int]:
        if self.grid_dims is not None:
            cols, rows = self.grid_dims
            if cols * rows != self.n_cells:
                raise ConfigError(f"grid_dims {self.grid_dims} do not multiply to {self.n_cells}")
            return cols, rows
        side = math.isqrt(self.n_cells)
        if side * side != self.n_cells:
            raise ConfigError(f"n_cells={self.n_cells} is not a perfect square; give grid_dims")
        return side, side

    @property
    def n_links(self) -> int:
        return self.n_cells * self.users_per_cell


@dataclass
class Topology:
    """Hexagonal grid of cell centres on a torus and each cell's interferer set."""

    cell_centers: np.ndarray  # (N, 2) km
    neighbors: list[list[int]]
    lattice: np.ndarray  # (2, 2) rows are the two torus period vectors, km
    neighbor_mask: np.ndarray = field(init=False)  # [n, m] True iff m in D_n

    def __post_init__(self):
        n = len(self.cell_centers)
        self.neighbor_mask = np.zeros((n, n), dtype=bool)
        for i, nbrs in enumerate(self.neighbors):
            self.neighbor_mask[i, nbrs] = True

    @property
    def n_cells(self) -> int:
        return len(self.cell_centers)

    def wrapped_displacement(self, a, b):
        return wrapped_displacement(a, b, self.lattice)

    def wrapped_distance(self, a, b):
        return np.linalg.norm(self.wrapped_displacement(a, b), axis=-1)


def wrapped_displacement(a, b, lattice):
    """Shortest vector from ``b`` to ``a`` on the torus spanned by ``lattice`` rows."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    inv = np.linalg.inv(lattice.T)
    coef = diff @ inv.T
    coef = coef - np.round(coef)
    base = coef @ lattice
    best = base
    best_d2 = np.sum(base**2, axis=-1)
    for u in (-1, 0, 1):
        for v in (-1, 0, 1):
            if u == 0 and v == 0:
                continue
            cand = base + u * lattice[0] + v * lattice[1]
            d2 = np.sum(cand**2, axis=-1)
            closer = d2 < best_d2
            best = np.where(closer[..., None], cand, best)
            best_d2 = np.where(closer, d2, best_d2)
    return best


def build_topology(cfg: ChannelConfig) -> Topology:
    """Lay the cells out on a hexagonal lattice with toroidal wraparound.

    Inter-site distance is ``2 * r_max``.  Each cell's interferer set holds the
    ``neighbor_cap`` nearest other cells (wrapped distance, ties by index),
    capped at ``n_cells - 1``.
    """
    cols, rows = cfg.dims()
    isd = 2.0 * cfg.r_max
    a1 = np.array([isd, 0.0])
    a2 = np.array([isd / 2.0, isd * math.sqrt(3.0) / 2.0])
    centers = np.array([c * a1 + r * a2 for r in range(rows) for c in range(cols)])
    lattice = np.stack([cols * a1, rows * a2])

    cap = min(cfg.neighbor_cap, cfg.n_cells - 1)
    dist = np.linalg.norm(wrapped_displacement(centers[:, None, :], centers[None, :, :], lattice), axis=-1)
    # round away float noise so equidistant cells tie exactly and fall back to index order
    dist = np.round(dist / isd, 9)
    neighbors = []
    for n in range(cfg.n_cells):
        others = [m for m in range(cfg.n_cells) if m != n]
        others.sort(key=lambda m: (dist[n, m], m))
        neighbors.append(others[:cap])
    return Topology(cell_centers=centers, neighbors=neighbors, lattice=lattice)


def pathloss(d, z=1.0, fixed: float = 120.9, slope: float = 37.6):
    """Linear attenuation ``10^(-(fixed + slope log10 d + 10 log10 z) / 10)``, d in km."""
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be > 0")
    if np.any(z <= 0):
        raise DomainError("shadowing factor must be > 0")
    return pathloss_db_to_linear(fixed + slope * np.log10(d) + 10.0 * np.log10(z))


def pathloss_db_to_linear(loss_db):
    return 10.0 ** (-np.asarray(loss_db, dtype=float) / 10.0)


@dataclass
class UserLayout:
    positions: np.ndarray  # (N, K, 2) km
    distances: np.ndarray  # (N_bs, N, K) km, wrapped
    shadowing: np.ndarray  # (N_bs, N, K) linear
    large_scale: np.ndarray  # (N_bs, N, K) linear attenuation


def drop_users(topo: Topology, cfg: ChannelConfig, rng: np.random.Generator,
               shadow_rng: np.random.Generator | None = None) -> UserLayout:
    """Place users area-uniformly in the annulus [r_min, r_max] and draw shadowing.

    ``shadow_rng`` defaults to ``rng``; pass a separate generator to keep the
    shadowing stream independent of placement.
    """
    shadow_rng = rng if shadow_rng is None else shadow_rng
    n, k = cfg.n_cells, cfg.users_per_cell
    u = rng.random((n, k))
    radius = np.sqrt(u * (cfg.r_max**2 - cfg.r_min**2) + cfg.r_min**2)
    angle = rng.uniform(0.0, 2.0 * math.pi, size=(n, k))
    offsets = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    positions = topo.cell_centers[:, None, :] + offsets

    distances = topo.wrapped_distance(positions[None, :, :, :], topo.cell_centers[:, None, None, :])
    # serving link: use the exact drawn radius (wrapping cannot shorten it)
    idx = np.arange(n)
    distances[idx, idx, :] = radius

    shadow_db = shadow_rng.normal(0.0, cfg.shadow_std, size=(n, n, k)) if cfg.shadow_std > 0 \
        else np.zeros((n, n, k))
    shadowing = 10.0 ** (shadow_db / 10.0)
    large_scale = pathloss(distances, shadowing, cfg.pathloss_fixed, cfg.pathloss_slope)
    return UserLayout(positions=positions, distances=distances, shadowing=shadowing,
                      large_scale=large_scale)


def bessel_j0(x: float, tol: float = 1e-12) -> float:
    """Zeroth-order Bessel function of the first kind by its power series."""
    x = float(x)
    half_sq = (x / 2.0) ** 2
    term = 1.0
    total = 1.0
    m = 0
    while abs(term) > tol or m < 2:
        m += 1
        term *= -half_sq / (m * m)
        total += term
        if m > 500:
            raise DomainError(f"J0 series did not converge for x={x}")
    return total


def jakes_rho(doppler: float, slot_period: float) -> float:
    """Lag-one correlation ``J0(2 pi f_d T)`` of the Gauss-Markov fading model."""
    return bessel_j0(2.0 * math.pi * doppler * slot_period)


@dataclass
class SmallScaleState:
    h: np.ndarray  # complex, (N_bs, N, K)
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric CN(0, 1) samples."""
    scale = math.sqrt(0.5)
    return scale * rng.standard_normal(shape) + 1j * scale * rng.standard_normal(shape)


def init_fading(shape, rho: float, rng: np.random.Generator) -> SmallScaleState:
    return SmallScaleState(h=complex_normal(rng, shape), rho=rho)


def jakes_step(state: SmallScaleState, rng: np.random.Generator | None,
               innovation: np.ndarray | None = None) -> SmallScaleState:
    """``h' = rho h + sqrt(1 - rho^2) e`` with i.i.d. CN(0, 1) innovation ``e``."""
    e = complex_normal(rng, state.h.shape) if innovation is None else innovation
    h = state.rho * state.h + math.sqrt(1.0 - state.rho**2) * e
    return SmallScaleState(h=h, rho=state.rho)


def assemble_gains(large_scale: np.ndarray, fading: SmallScaleState | np.ndarray) -> np.ndarray:
    h = fading.h if isinstance(fading, SmallScaleState) else np.asarray(fading)
    return (h.real**2 + h.imag**2) * large_scale
