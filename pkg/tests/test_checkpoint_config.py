import json

import numpy as np
import pytest
import yaml

from chaosrl import checkpoint, config
from chaosrl.checkpoint import Checkpoint, CheckpointFormatError, CheckpointVersionError
from chaosrl.config import ConfigError, RunConfig
from chaosrl.learning import init_feedforward_actor
from chaosrl.netcore import actor_step, init_actor, init_critic


def test_round_trip_is_byte_identical(tmp_path):
    a = init_actor(1)
    actor_step(a, np.full(144, 0.1))
    ck = Checkpoint("chaotic", a, init_critic(1), 1000, 1)
    p1 = checkpoint.save(ck, tmp_path / "a.json")
    back = checkpoint.load(p1)
    p2 = checkpoint.save(back, tmp_path / "b.json")
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(back.actor.w_fb, a.w_fb) and back.episode == 1000
    assert np.all(back.actor.hidden == 0)
    doc = json.loads(p1.read_text())
    for key in ("format_version", "n_input", "n_hidden", "n_output", "w_in", "w_out", "w_fb",
                "activation_kind", "init_seed"):
        assert key in doc


def test_baseline_round_trip(tmp_path):
    ck = Checkpoint("baseline", init_feedforward_actor(2), None, 5, 2)
    back = checkpoint.load(checkpoint.save(ck, tmp_path / "b.json"))
    assert back.method == "baseline" and back.critic is None
    assert np.array_equal(back.actor.w_in, ck.actor.w_in)


def test_version_mismatch(tmp_path):
    doc = checkpoint.to_dict(Checkpoint("chaotic", init_actor(1), None))
    doc["format_version"] = 99
    p = tmp_path / "v.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(CheckpointVersionError):
        checkpoint.load(p)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("w_in"),
    lambda d: d.__setitem__("w_out", [[1.0, 2.0]]),
    lambda d: d.__setitem__("method", "genetic"),
    lambda d: d.__setitem__("activation_kind", "relu"),
    lambda d: d.__setitem__("w_fb", "nope"),
])
def test_malformed_checkpoints(tmp_path, mutate):
    doc = checkpoint.to_dict(Checkpoint("chaotic", init_actor(1), None))
    mutate(doc)
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(CheckpointFormatError):
        checkpoint.load(p)
    p.write_text("{not json")
    with pytest.raises(CheckpointFormatError):
        checkpoint.load(p)


def test_default_config_round_trips(tmp_path):
    cfg = RunConfig()
    cfg.validate()
    p = tmp_path / "c.yaml"
    p.write_text(cfg.dump())
    back = config.load(p)
    assert back == cfg and back.digest() == cfg.digest()


def test_digest_ignores_output_dir_only():
    a, b = RunConfig(), RunConfig(output_dir="elsewhere", workers=4)
    assert a.digest() == b.digest()
    assert RunConfig(episodes=10).digest() != a.digest()


def test_nested_override():
    cfg = config.from_dict({"method": "baseline", "td": {"gamma": 0.5}, "world": {"max_steps": 50},
                            "seeds": [3, 4]})
    assert cfg.td.gamma == 0.5 and cfg.world.max_steps == 50 and cfg.td.eta_critic == RunConfig().td.eta_critic


@pytest.mark.parametrize("data,field", [
    ({"episodes": 0}, "episodes"),
    ({"seeds": []}, "seeds"),
    ({"seeds": [1, 1]}, "seeds"),
    ({"checkpoint_every": 0}, "checkpoint_every"),
    ({"method": "sarsa"}, "method"),
    ({"td": {"gamma": 1.5}}, "gamma"),
    ({"td": {"alpha": 1}}, "td.alpha"),
    ({"episodes": "many"}, "episodes"),
    ({"actor_init": {"g_fb": -2}}, "g_fb"),
    ({"world": 3}, "world"),
    ({"bogus": 1}, "bogus"),
])
def test_config_errors_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field):
        config.from_dict(data)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("episodes: [1,\n")
    with pytest.raises(ConfigError):
        config.load(bad)


def test_dump_is_plain_yaml():
    data = yaml.safe_load(RunConfig().dump())
    assert data["world"]["goal_center"] == [0.0, 8.0] and data["method"] == "chaotic"
