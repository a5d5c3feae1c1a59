"""Experiment configuration documents (YAML) and their typed form.

Power-like quantities are written in dBm in the document and converted to
watts once here.  Two presets ship with the package: ``full`` (full-scale
scenario and hyper-parameters) and ``desk`` (9 cells, 2 users, 500 episodes).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from ..channel import ChannelConfig, dbm_to_watt
from ..dql import TrainConfig
from ..errors import ConfigError
from ..features import FeatureConfig

SCHEMES = ("dqn", "fp", "wmmse", "max", "random")
PRESETS = ("full", "desk")


@dataclass
class ExperimentConfig:
    channel: ChannelConfig
    features: FeatureConfig
    train: TrainConfig
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))
    repeats: int = 500
    seed: int | None = None
    out_dir: str = "runs"
    eval_slots: int = 50
    gammas: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.7, 0.9])
    eval_cells: list[int] = field(default_factory=lambda: [9, 25, 49])
    eval_users: list[int] = field(default_factory=lambda: [1, 2, 4, 6])
    trace_slots: int = 1000
    smooth_window: int = 50
    solver_tol: float = 1e-6
    solver_max_iter: int = 200
    document: dict = field(default_factory=dict, repr=False)  # resolved source document

    def __post_init__(self):
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; choose from {list(SCHEMES)}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.eval_slots < 1 or self.trace_slots < 1:
            raise ConfigError("slot counts must be >= 1")
        if self.smooth_window < 1:
            raise ConfigError("smooth_window must be >= 1")
        for g in self.gammas:
            if not 0.0 <= g < 1.0:
                raise ConfigError(f"gamma {g} outside [0, 1)")


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {list(PRESETS)}")
    text = resources.files("dqlpa.harness").joinpath("configs", f"{name}.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_document(source: str | Path | None) -> dict:
    """Resolve a preset name or YAML path into a full document.

    A file only needs the keys it changes; everything else comes from the
    ``full`` preset, or from the preset named by a top-level ``base`` key.
    """
    if source is None:
        return preset_document("full")
    if str(source) in PRESETS:
        return preset_document(str(source))
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = doc.pop("base", "full")
    return merge(preset_document(base), doc)


def _section(doc, name, allowed):
    sec = dict(doc.get(name) or {})
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return sec


_CHANNEL_KEYS = ("n_cells", "users_per_cell", "r_min", "r_max", "doppler", "slot_period", "shadow_std",
                 "pathloss_fixed", "pathloss_slope", "noise_power_dbm", "neighbor_cap", "grid_dims")
_FEATURE_KEYS = ("top_c", "action_count", "p_min_dbm", "p_max_dbm")
_TRAIN_KEYS = ("gamma", "lr_initial", "lr_final", "eps_initial", "eps_final", "episodes_observe",
               "episodes_explore", "slots_per_episode", "train_interval", "batch_size", "memory_size",
               "hidden")
_EXPERIMENT_KEYS = ("schemes", "repeats", "seed", "out_dir", "eval_slots", "gammas", "eval_cells",
                    "eval_users", "trace_slots", "smooth_window", "solver_tol", "solver_max_iter")


def from_document(doc: dict) -> ExperimentConfig:
    unknown = set(doc) - {"channel", "features", "train", "experiment"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    ch = _section(doc, "channel", _CHANNEL_KEYS)
    if "noise_power_dbm" in ch:
        ch["noise_power"] = float(dbm_to_watt(ch.pop("noise_power_dbm")))
    fe = _section(doc, "features", _FEATURE_KEYS)
    if "p_min_dbm" in fe:
        fe["p_min"] = float(dbm_to_watt(fe.pop("p_min_dbm")))
    if "p_max_dbm" in fe:
        fe["p_max"] = float(dbm_to_watt(fe.pop("p_max_dbm")))
    tr = _section(doc, "train", _TRAIN_KEYS)
    ex = _section(doc, "experiment", _EXPERIMENT_KEYS)
    try:
        return ExperimentConfig(channel=ChannelConfig(**ch), features=FeatureConfig(**fe),
                                train=TrainConfig(**tr), document=copy.deepcopy(doc), **ex)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(source=None, overrides: dict | None = None) -> ExperimentConfig:
    doc = load_document(source)
    if overrides:
        doc = merge(doc, overrides)
    return from_document(doc)


def scale_episodes(doc: dict, total: int) -> dict:
    """Override the episode budget, keeping the observe/explore proportion."""
    if total < 2:
        raise ConfigError("need at least 2 episodes (one observation, one exploration)")
    train = doc.get("train", {})
    obs, exp = int(train.get("episodes_observe", 100)), int(train.get("episodes_explore", 9900))
    observe = max(1, round(total * obs / (obs + exp))) if obs > 0 else 0
    observe = min(observe, total - 1)
    return merge(doc, {"train": {"episodes_observe": observe, "episodes_explore": total - observe}})
