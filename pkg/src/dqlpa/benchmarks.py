"""Classical power allocators on the flattened interference model.

Links ``i = n * K + k`` are described by a gain matrix ``a[i, j]`` (transmitter
of link ``j`` to receiver of link ``i``), so that

    sinr_i = a_ii p_i / (sum_{j != i} a_ij p_j + noise).

FP and WMMSE both start from full power and stop once the sum-rate improves
by less than ``tol`` bits/s/Hz or after ``max_iter`` iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Topology
from .errors import SearchSpaceError

WMMSE_FLOOR = 1e-12
BRUTE_FORCE_LIMIT = 10**7


@dataclass
class InterferenceInstance:
    a: np.ndarray  # (L, L)
    noise_power: float
    p_max: float
    links: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n_links(self) -> int:
        return len(self.a)

    @property
    def direct(self) -> np.ndarray:
        return np.diag(self.a)

    def sinr(self, p) -> np.ndarray:
        """SINR for one allocation ``(L,)`` or a stack ``(M, L)``."""
        p = np.asarray(p, dtype=float)
        received = p @ self.a.T  # sum_j a_ij p_j
        signal = self.direct * p
        return signal / (received - signal + self.noise_power)

    def sum_rate(self, p):
        rates = np.log2(1.0 + self.sinr(p))
        return rates.sum(axis=-1)

    def reshape(self, p, users: int) -> np.ndarray:
        return np.asarray(p).reshape(-1, users)


def build_instance(g: np.ndarray, topo: Topology, noise_power: float, p_max: float) -> InterferenceInstance:
    n_cells, _, users = g.shape
    cell_of = np.repeat(np.arange(n_cells), users)
    user_of = np.tile(np.arange(users), n_cells)
    # same BS: the victim's own downlink channel carries every stream of BS n
    heard = topo.neighbor_mask | np.eye(n_cells, dtype=bool)
    a = g[cell_of[None, :], cell_of[:, None], user_of[:, None]] * heard[cell_of[:, None], cell_of[None, :]]
    links = [(n, k) for n in range(n_cells) for k in range(users)]
    return InterferenceInstance(a=a, noise_power=float(noise_power), p_max=float(p_max), links=links)


@dataclass
class SolverResult:
    powers: np.ndarray  # (L,)
    objective: list[float]  # sum-rate after each iteration, starting with the initial point
    converged: bool  # False: stopped at max_iter, powers are the best iterate seen
    flagged: bool = False  # numerical guard hit (WMMSE)

    @property
    def iterations(self) -> int:
        return len(self.objective) - 1

    @property
    def value(self) -> float:
        return max(self.objective)


def fp_allocate(inst: InterferenceInstance, tol: float = 1e-6, max_iter: int = 200) -> SolverResult:
    """Closed-form fractional programming (quadratic transform) for sum-rate."""
    a = inst.a
    direct = inst.direct
    p = np.full(inst.n_links, inst.p_max)
    trace = [float(inst.sum_rate(p))]
    best_p, best_val = p, trace[0]
    converged = False
    for _ in range(max_iter):
        gamma = inst.sinr(p)
        received = a @ p + inst.noise_power
        y = np.sqrt((1.0 + gamma) * direct * p) / received
        num = y**2 * (1.0 + gamma) * direct
        den = (y**2 @ a) ** 2  # (sum_j y_j^2 a_ji)^2
        p = np.minimum(inst.p_max, np.divide(num, den, out=np.zeros_like(num), where=den > 0))
        trace.append(float(inst.sum_rate(p)))
        if trace[-1] >= best_val:
            best_p, best_val = p, trace[-1]
        if trace[-1] - trace[-2] < tol:
            converged = True
            break
    return SolverResult(powers=best_p, objective=trace, converged=converged)


def wmmse_allocate(inst: InterferenceInstance, tol: float = 1e-6, max_iter: int = 200) -> SolverResult:
    """Scalar WMMSE on transmit amplitudes ``v = sqrt(p)``."""
    a = inst.a
    h = np.sqrt(inst.direct)
    v_max = np.sqrt(inst.p_max)
    v = np.full(inst.n_links, v_max)
    trace = [float(inst.sum_rate(v**2))]
    converged = False
    flagged = False
    for _ in range(max_iter):
        u = h * v / (a @ v**2 + inst.noise_power)
        mse = 1.0 - u * h * v
        if np.any(mse <= WMMSE_FLOOR):
            flagged = True
            mse = np.maximum(mse, WMMSE_FLOOR)
        w = 1.0 / mse
        den = (w * u**2) @ a  # sum_j w_j u_j^2 a_ji
        v = np.clip(np.divide(w * u * h, den, out=np.zeros_like(den), where=den > 0), 0.0, v_max)
        trace.append(float(inst.sum_rate(v**2)))
        if abs(trace[-1] - trace[-2]) < tol:
            converged = True
            break
    return SolverResult(powers=v**2, objective=trace, converged=converged, flagged=flagged)


def max_power(inst: InterferenceInstance) -> np.ndarray:
    return np.full(inst.n_links, inst.p_max)


def random_power(inst: InterferenceInstance, levels, rng: np.random.Generator) -> np.ndarray:
    levels = np.asarray(levels, dtype=float)
    return levels[rng.integers(len(levels), size=inst.n_links)]


def brute_force(inst: InterferenceInstance, levels=50, chunk: int = 200_000) -> tuple[np.ndarray, float]:
    """Exhaustive search of the sum-rate over a per-link power grid.

    ``levels`` is either a count (uniform grid on ``[0, p_max]``) or an explicit
    ascending array.  Ties go to the lexicographically smallest allocation.
    """
    grid = np.linspace(0.0, inst.p_max, int(levels)) if np.ndim(levels) == 0 else np.asarray(levels, float)
    n = inst.n_links
    total = len(grid) ** n
    if total > BRUTE_FORCE_LIMIT:
        raise SearchSpaceError(f"{len(grid)}^{n} = {total} allocations exceeds {BRUTE_FORCE_LIMIT}")
    # first link is the most significant digit, so enumeration order is lexicographic
    radix = len(grid) ** np.arange(n - 1, -1, -1)
    best_val, best_p = -np.inf, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        p = grid[(idx[:, None] // radix) % len(grid)]
        vals = inst.sum_rate(p)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_p = float(vals[i]), p[i].copy()
    return best_p, best_val
