"""Training runs, discount-factor sweep, user-density evaluation, slot traces.

Every command writes CSV files with a header row plus a ``manifest.json``
describing the resolved configuration.  Outputs are a pure function of the
configuration and seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..benchmarks import (InterferenceInstance, brute_force, build_instance, fp_allocate, max_power,
                          wmmse_allocate)
from ..channel import ChannelConfig, build_topology, drop_users
from ..dql import (QNetwork, centralized_train, greedy_policy, load_checkpoint, run_policy,
                   save_checkpoint)
from ..errors import CheckpointError, ConfigError
from ..features import build_action_set
from ..netsim import EnvState, reset_env
from ..rng import substream
from .config import ExperimentConfig

log = logging.getLogger(__name__)

EVAL_PHASE = 1
TRACE_PHASE = 2
ORACLE_PHASE = 3

METRIC_FIELDS = ("experiment", "scheme", "episode", "slot", "gamma", "K", "N", "sum_rate", "avg_rate", "seed")


@dataclass
class MetricsRow:
    experiment: str
    scheme: str
    sum_rate: float
    K: int
    N: int
    seed: int
    gamma: float | None = None
    episode: int | None = None
    slot: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def avg_rate(self) -> float:
        return self.sum_rate / (self.N * self.K)

    def as_dict(self) -> dict:
        row = {name: getattr(self, name) for name in METRIC_FIELDS}
        row.update(self.extra)
        return row


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, rows: list[MetricsRow], extra_fields: tuple[str, ...] = ()) -> None:
    fields = list(METRIC_FIELDS) + list(extra_fields)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            d = row.as_dict()
            writer.writerow([_fmt(d.get(f)) for f in fields])


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, outputs: list[str], **extra) -> None:
    doc = {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.document,
           "outputs": outputs, **extra}
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def trailing_mean(values, window: int) -> list[float]:
    values = np.asarray(values, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    out = []
    for i in range(len(values)):
        lo = max(0, i + 1 - window)
        out.append(float((csum[i + 1] - csum[lo]) / (i + 1 - lo)))
    return out


def _require_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("a seed is required for experiment commands (--seed)")
    return int(cfg.seed)


def _prepare_out(out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def scheme_policy(scheme: str, cfg: ExperimentConfig, net: QNetwork | None,
                  random_rng: np.random.Generator | None = None):
    """``policy(env) -> powers (N, K)`` for one allocation scheme."""
    fc = cfg.features
    levels = build_action_set(fc)

    def instance(env: EnvState) -> InterferenceInstance:
        return build_instance(env.gains, env.topology, env.cfg.noise_power, fc.p_max)

    if scheme == "dqn":
        if net is None:
            raise ConfigError("scheme 'dqn' needs a trained checkpoint")
        return greedy_policy(net, fc, levels)
    if scheme == "fp":
        return lambda env: fp_allocate(instance(env), cfg.solver_tol, cfg.solver_max_iter).powers.reshape(env.shape)
    if scheme == "wmmse":
        return lambda env: wmmse_allocate(instance(env), cfg.solver_tol, cfg.solver_max_iter).powers.reshape(env.shape)
    if scheme == "max":
        return lambda env: max_power(instance(env)).reshape(env.shape)
    if scheme == "random":
        if random_rng is None:
            raise ValueError("random scheme needs a generator")
        return lambda env: levels[random_rng.integers(len(levels), size=env.shape)]
    raise ConfigError(f"unknown scheme {scheme!r}")


def check_compatible(cfg: ExperimentConfig, ckpt_features) -> None:
    if ckpt_features != cfg.features:
        raise CheckpointError(
            f"checkpoint was trained with {ckpt_features}, but the scenario uses {cfg.features}; "
            "state length and power levels must match")


def _load_net(cfg: ExperimentConfig, checkpoint) -> QNetwork | None:
    if "dqn" not in cfg.schemes:
        return None
    if checkpoint is None:
        raise ConfigError("scheme 'dqn' requested but no --checkpoint given")
    net, features, _ = load_checkpoint(checkpoint)
    check_compatible(cfg, features)
    return net


def evaluate(cfg: ExperimentConfig, net: QNetwork | None, channel: ChannelConfig, schemes, repeats: int,
             slots: int, seed: int) -> dict[str, float]:
    """Mean sum-rate per scheme over ``repeats`` fresh layouts of ``slots`` slots.

    All schemes see the same layouts and fading sample paths.
    """
    topo = build_topology(channel)
    n, k = channel.n_cells, channel.users_per_cell
    totals = {s: 0.0 for s in schemes}
    for r in range(repeats):
        layout = drop_users(topo, channel, substream(seed, "placement", EVAL_PHASE, n, k, r),
                            substream(seed, "shadowing", EVAL_PHASE, n, k, r))
        for scheme in schemes:
            fading = substream(seed, "fading", EVAL_PHASE, n, k, r)
            env = reset_env(channel, topo, layout, fading)
            policy = scheme_policy(scheme, cfg, net, substream(seed, "random_pa", EVAL_PHASE, n, k, r))
            reports, _ = run_policy(env, slots, policy, fading)
            totals[scheme] += sum(rep.sum_rate for rep in reports) / slots
    return {s: v / repeats for s, v in totals.items()}


def cmd_train(cfg: ExperimentConfig, out) -> dict:
    seed = _require_seed(cfg)
    out = _prepare_out(out)
    ch = cfg.channel
    log.info("training: N=%d K=%d, %d episodes, gamma=%g", ch.n_cells, ch.users_per_cell,
             cfg.train.episodes, cfg.train.gamma)
    result = centralized_train(ch, cfg.features, cfg.train, seed)
    rows = _curve_rows("train", result.sum_rate, cfg, cfg.train.gamma, seed)
    write_csv(out / "train_curve.csv", rows, ("smoothed_avg_rate",))
    save_checkpoint(out / "checkpoint.json", result.net, cfg.features,
                    {"gamma": cfg.train.gamma, "seed": seed, "n_cells": ch.n_cells,
                     "users_per_cell": ch.users_per_cell, "episodes": cfg.train.episodes})
    write_manifest(out, "train", cfg, ["train_curve.csv", "checkpoint.json"])
    return {"result": result, "rows": rows}


def _curve_rows(experiment, sum_rates, cfg, gamma, seed):
    n, k = cfg.channel.n_cells, cfg.channel.users_per_cell
    rows = [MetricsRow(experiment, "dqn", s, K=k, N=n, seed=seed, gamma=gamma, episode=i)
            for i, s in enumerate(sum_rates)]
    smooth = trailing_mean([r.avg_rate for r in rows], cfg.smooth_window)
    for row, s in zip(rows, smooth):
        row.extra["smoothed_avg_rate"] = s
    return rows


def cmd_sweep_gamma(cfg: ExperimentConfig, out) -> dict:
    """One network per discount factor (shared seed), each evaluated on several cell counts."""
    seed = _require_seed(cfg)
    out = _prepare_out(out)
    curve_rows, eval_rows, nets = [], [], {}
    outputs = ["sweep_curves.csv", "sweep_eval.csv"]
    for gamma in cfg.gammas:
        train = replace(cfg.train, gamma=float(gamma))
        log.info("sweep: training gamma=%g", gamma)
        result = centralized_train(cfg.channel, cfg.features, train, seed)
        nets[gamma] = result.net
        curve_rows += _curve_rows("sweep-gamma", result.sum_rate, cfg, float(gamma), seed)
        name = f"checkpoint_gamma_{gamma:g}.json"
        save_checkpoint(out / name, result.net, cfg.features, {"gamma": float(gamma), "seed": seed})
        outputs.append(name)
        for n_cells in cfg.eval_cells:
            channel = _channel_with(cfg.channel, n_cells=n_cells)
            means = evaluate(cfg, result.net, channel, ["dqn"], cfg.repeats, cfg.eval_slots, seed)
            eval_rows.append(MetricsRow("sweep-gamma-eval", "dqn", means["dqn"], K=channel.users_per_cell,
                                        N=n_cells, seed=seed, gamma=float(gamma),
                                        extra={"repeats": cfg.repeats}))
    write_csv(out / "sweep_curves.csv", curve_rows, ("smoothed_avg_rate",))
    write_csv(out / "sweep_eval.csv", eval_rows, ("repeats",))
    write_manifest(out, "sweep-gamma", cfg, outputs)
    return {"curves": curve_rows, "eval": eval_rows, "nets": nets}


def _channel_with(channel: ChannelConfig, **changes) -> ChannelConfig:
    if "n_cells" in changes and channel.grid_dims is not None:
        changes.setdefault("grid_dims", None)
    return replace(channel, **changes)


def cmd_eval(cfg: ExperimentConfig, out, checkpoint=None) -> dict:
    """Average rate of every scheme for each users-per-cell value."""
    seed = _require_seed(cfg)
    out = _prepare_out(out)
    net = _load_net(cfg, checkpoint)
    rows = []
    for users in cfg.eval_users:
        channel = _channel_with(cfg.channel, users_per_cell=int(users))
        log.info("eval: K=%d over %d repeats", users, cfg.repeats)
        means = evaluate(cfg, net, channel, cfg.schemes, cfg.repeats, cfg.eval_slots, seed)
        for scheme in cfg.schemes:
            rows.append(MetricsRow("eval", scheme, means[scheme], K=int(users), N=channel.n_cells,
                                   seed=seed, extra={"repeats": cfg.repeats}))
    write_csv(out / "eval.csv", rows, ("repeats",))
    write_manifest(out, "eval", cfg, ["eval.csv"], checkpoint=None if checkpoint is None else str(checkpoint))
    return {"rows": rows}


def gain_digest(g: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(g, dtype="<f8").tobytes()).hexdigest()[:16]


def cmd_trace(cfg: ExperimentConfig, out, checkpoint=None, slots: int | None = None) -> dict:
    """Per-slot sum-rate of every scheme on one layout and one shared fading path."""
    seed = _require_seed(cfg)
    out = _prepare_out(out)
    net = _load_net(cfg, checkpoint)
    slots = cfg.trace_slots if slots is None else int(slots)
    channel = cfg.channel
    n, k = channel.n_cells, channel.users_per_cell
    topo = build_topology(channel)
    layout = drop_users(topo, channel, substream(seed, "placement", TRACE_PHASE, n, k),
                        substream(seed, "shadowing", TRACE_PHASE, n, k))
    per_scheme = {}
    for scheme in cfg.schemes:
        fading = substream(seed, "fading", TRACE_PHASE, n, k)
        env = reset_env(channel, topo, layout, fading)
        policy = scheme_policy(scheme, cfg, net, substream(seed, "random_pa", TRACE_PHASE, n, k))
        entries = []
        for t in range(slots):
            digest = gain_digest(env.gains)
            reports, env = run_policy(env, 1, policy, fading)
            entries.append((reports[0].sum_rate, digest))
        per_scheme[scheme] = entries
    rows = []
    for t in range(slots):
        for scheme in cfg.schemes:
            value, digest = per_scheme[scheme][t]
            rows.append(MetricsRow("trace", scheme, value, K=k, N=n, seed=seed, slot=t,
                                   extra={"channel_digest": digest}))
    write_csv(out / "trace.csv", rows, ("channel_digest",))
    write_manifest(out, "trace", cfg, ["trace.csv"], checkpoint=None if checkpoint is None else str(checkpoint))
    return {"rows": rows}


def random_instance(rng: np.random.Generator, n_links: int = 3, cross_scale: float = 0.3,
                    snr_db: float = 20.0) -> InterferenceInstance:
    """Small synthetic instance: Rayleigh-power direct gains, weaker random cross gains, p_max = 1."""
    a = cross_scale * rng.exponential(1.0, size=(n_links, n_links))
    np.fill_diagonal(a, rng.exponential(1.0, size=n_links) + 1e-3)
    return InterferenceInstance(a=a, noise_power=10 ** (-snr_db / 10), p_max=1.0,
                                links=[(i, 0) for i in range(n_links)])


def oracle_check(seed: int, instances: int = 100, n_links: int = 3, levels: int = 50,
                 tol: float = 1e-6, max_iter: int = 200) -> list[dict]:
    rows = []
    for i in range(instances):
        inst = random_instance(substream(seed, "instances", ORACLE_PHASE, i), n_links)
        _, best = brute_force(inst, levels)
        fp = fp_allocate(inst, tol, max_iter)
        wm = wmmse_allocate(inst, tol, max_iter)
        rows.append({"instance": i, "brute_force": best, "fp": float(inst.sum_rate(fp.powers)),
                     "wmmse": float(inst.sum_rate(wm.powers)), "fp_iterations": fp.iterations,
                     "wmmse_iterations": wm.iterations})
    return rows


def cmd_oracle_check(cfg: ExperimentConfig, out, instances: int = 100, levels: int = 50) -> dict:
    seed = _require_seed(cfg)
    out = _prepare_out(out)
    rows = oracle_check(seed, instances, levels=levels, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    fields = ["instance", "brute_force", "fp", "wmmse", "fp_ratio", "wmmse_ratio", "fp_iterations",
              "wmmse_iterations"]
    with open(out / "oracle_check.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in rows:
            r["fp_ratio"] = r["fp"] / r["brute_force"]
            r["wmmse_ratio"] = r["wmmse"] / r["brute_force"]
            writer.writerow([_fmt(r[f]) for f in fields])
    write_manifest(out, "oracle-check", cfg, ["oracle_check.csv"], instances=instances, levels=levels)
    summary = {"fp_mean_ratio": float(np.mean([r["fp_ratio"] for r in rows])),
               "wmmse_mean_ratio": float(np.mean([r["wmmse_ratio"] for r in rows]))}
    return {"rows": rows, **summary}
