"""JSON checkpoint of a Q network, its Adam state and the feature configuration.

Arrays are flattened row-major and written as shortest round-trip decimal
floats, so a save/load cycle is exact and identical networks produce
identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from ..features import FeatureConfig
from .network import QNetwork

FORMAT = "dqlpa-qnetwork"
VERSION = 1


def _flat(a: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(a, dtype=float).ravel(order="C")]


def checkpoint_dict(net: QNetwork, feature_cfg: FeatureConfig, extra: dict | None = None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "layer_dims": list(net.dims),
        "weights": [_flat(w) for w in net.weights],
        "biases": [_flat(b) for b in net.biases],
        "adam": {
            "t": net.adam.t,
            "beta1": net.adam.beta1,
            "beta2": net.adam.beta2,
            "epsilon": net.adam.epsilon,
            "m": [_flat(m) for m in net.adam.m],
            "v": [_flat(v) for v in net.adam.v],
        },
        "feature_config": asdict(feature_cfg),
        "meta": extra or {},
    }


def save_checkpoint(path, net: QNetwork, feature_cfg: FeatureConfig, extra: dict | None = None) -> None:
    text = json.dumps(checkpoint_dict(net, feature_cfg, extra), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _array(values, shape, what):
    arr = np.asarray(values, dtype=float)
    if arr.size != int(np.prod(shape)):
        raise CheckpointError(f"{what}: expected {int(np.prod(shape))} values, found {arr.size}")
    return arr.reshape(shape)


def network_from_dict(doc: dict) -> tuple[QNetwork, FeatureConfig, dict]:
    if doc.get("format") != FORMAT:
        raise CheckpointError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')}")
    try:
        feature_cfg = FeatureConfig(**doc["feature_config"])
        dims = [int(d) for d in doc["layer_dims"]]
        net = QNetwork(dims)
        n_layers = len(dims) - 1
        if len(doc["weights"]) != n_layers or len(doc["biases"]) != n_layers:
            raise CheckpointError("layer count does not match layer_dims")
        if dims[0] != feature_cfg.state_dim or dims[-1] != feature_cfg.action_count:
            raise CheckpointError(
                f"layer dims {dims} incompatible with feature config "
                f"(state {feature_cfg.state_dim}, actions {feature_cfg.action_count})")
        shapes = [p.shape for p in net.params]
        net.weights = [_array(w, (a, b), f"weights[{i}]")
                       for i, (w, a, b) in enumerate(zip(doc["weights"], dims[:-1], dims[1:]))]
        net.biases = [_array(b, (n,), f"biases[{i}]") for i, (b, n) in enumerate(zip(doc["biases"], dims[1:]))]
        adam = doc["adam"]
        if len(adam["m"]) != len(shapes) or len(adam["v"]) != len(shapes):
            raise CheckpointError("Adam state does not match parameter count")
        net.adam.m = [_array(m, s, f"adam.m[{i}]") for i, (m, s) in enumerate(zip(adam["m"], shapes))]
        net.adam.v = [_array(v, s, f"adam.v[{i}]") for i, (v, s) in enumerate(zip(adam["v"], shapes))]
        net.adam.t = int(adam["t"])
        net.adam.beta1, net.adam.beta2, net.adam.epsilon = adam["beta1"], adam["beta2"], adam["epsilon"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return net, feature_cfg, doc.get("meta", {})


def load_checkpoint(path) -> tuple[QNetwork, FeatureConfig, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from exc
    return network_from_dict(doc)
