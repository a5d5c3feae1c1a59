import json

import numpy as np
import pytest

from dqlpa.dql import QNetwork, ReplayMemory, load_checkpoint, save_checkpoint, train_step
from dqlpa.dql.checkpoint import checkpoint_dict, network_from_dict
from dqlpa.errors import CheckpointError
from dqlpa.features import FeatureConfig

FEATURES = FeatureConfig(top_c=2)


def trained_net(seed=0):
    rng = np.random.default_rng(seed)
    net = QNetwork([FEATURES.state_dim, 6, 5, FEATURES.action_count], rng)
    for _ in range(3):
        memory = ReplayMemory(16, FEATURES.state_dim)
        memory.push_many(rng.normal(size=(16, FEATURES.state_dim)), rng.integers(FEATURES.action_count, size=16),
                         rng.random(16))
        batch = memory.sample(16, rng)
        train_step(net, batch, 1e-3)
    return net


def test_round_trip_exact(tmp_path):
    net = trained_net()
    save_checkpoint(tmp_path / "c.json", net, FEATURES, {"gamma": 0.0})
    loaded, features, meta = load_checkpoint(tmp_path / "c.json")
    assert features == FEATURES and meta == {"gamma": 0.0}
    for a, b in zip(net.params, loaded.params):
        assert a.tobytes() == b.tobytes()
    for a, b in zip(net.adam.m + net.adam.v, loaded.adam.m + loaded.adam.v):
        assert a.tobytes() == b.tobytes()
    assert loaded.adam.t == net.adam.t == 3
    x = np.random.default_rng(1).normal(size=(4, FEATURES.state_dim))
    assert net(x).tobytes() == loaded(x).tobytes()


def test_identical_bytes(tmp_path):
    save_checkpoint(tmp_path / "a.json", trained_net(), FEATURES)
    save_checkpoint(tmp_path / "b.json", trained_net(), FEATURES)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_resave_is_stable(tmp_path):
    save_checkpoint(tmp_path / "a.json", trained_net(), FEATURES)
    net, features, _ = load_checkpoint(tmp_path / "a.json")
    save_checkpoint(tmp_path / "b.json", net, features)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_dims_mismatch_with_features():
    doc = checkpoint_dict(trained_net(), FEATURES)
    doc["feature_config"]["top_c"] = 16
    with pytest.raises(CheckpointError):
        network_from_dict(doc)


def test_truncated_weights():
    doc = checkpoint_dict(trained_net(), FEATURES)
    doc["weights"][1] = doc["weights"][1][:-1]
    with pytest.raises(CheckpointError):
        network_from_dict(doc)


@pytest.mark.parametrize("key, value", [("format", "other"), ("version", 99)])
def test_header_checked(key, value):
    doc = checkpoint_dict(trained_net(), FEATURES)
    doc[key] = value
    with pytest.raises(CheckpointError):
        network_from_dict(doc)


def test_invalid_json(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "bad.json")


def test_missing_key():
    doc = checkpoint_dict(trained_net(), FEATURES)
    del doc["adam"]
    with pytest.raises(CheckpointError):
        network_from_dict(doc)


def test_json_is_plain(tmp_path):
    save_checkpoint(tmp_path / "c.json", trained_net(), FEATURES)
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc["layer_dims"] == [FEATURES.state_dim, 6, 5, FEATURES.action_count]
    assert len(doc["weights"][0]) == FEATURES.state_dim * 6
