import json

import pytest

from isoflow.harness.config import (
    ConfigError,
    DynamicsConfig,
    EnsembleConfig,
    ExperimentConfig,
    KernelConfig,
    config_from_dict,
    load_config,
    save_config,
    validate,
)


def make_config(**over):
    base = dict(
        kernel=KernelConfig(type="bump", epsilon=1.0),
        particles=(0.0, 1.0),
        dynamics=DynamicsConfig(dt=0.01, t_max=10.0, record_times=(1.0, 10.0)),
        ensemble=EnsembleConfig(replications=500, base_seed=1, antithetic=True),
        claims=("h1.exact",),
        output="out",
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_round_trip_identity(tmp_path):
    cfg = make_config()
    path = tmp_path / "c.json"
    save_config(cfg, path)
    again = load_config(path)
    assert again == cfg
    assert again.digest() == cfg.digest()
    # serialize -> parse -> serialize is byte-stable
    assert again.to_json() == cfg.to_json()


def test_digest_changes_with_seed():
    a = make_config()
    b = make_config(ensemble=EnsembleConfig(replications=500, base_seed=2))
    assert a.digest() != b.digest()


def test_minimum_replications():
    cfg = make_config(ensemble=EnsembleConfig(replications=50, base_seed=1))
    problems = validate(cfg)
    assert any("below minimum" in p for p in problems)


def test_record_times_window():
    cfg = make_config(dynamics=DynamicsConfig(dt=0.01, t_max=10.0,
                                              record_times=(1.0, 11.0)))
    assert any("record_times" in p for p in validate(cfg))


def test_unknown_claim_listed():
    cfg = make_config(claims=("nope",))
    msgs = validate(cfg)
    assert any("nope" in p and "registered" in p for p in msgs)


def test_claim_particle_requirements():
    cfg = make_config(claims=("thm3.3.even.n2",))
    assert any("4 particles" in p for p in validate(cfg))
    ok = make_config(claims=("thm3.3.even.n2",), particles=(0.0, 0.25, 0.5, 0.75))
    assert validate(ok) == []


def test_particles_order():
    cfg = make_config(particles=(1.0, 0.0))
    assert any("increasing" in p for p in validate(cfg))


def test_malformed_json_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "kernel": {,}\n}\n')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        config_from_dict({"schema_version": 1, "bogus": 1})


def test_schema_version_rejected():
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({"schema_version": 99})


def test_invalid_config_file_raises(tmp_path):
    cfg = make_config(ensemble=EnsembleConfig(replications=10, base_seed=1))
    path = tmp_path / "c.json"
    save_config(cfg, path)
    with pytest.raises(ConfigError, match="below minimum"):
        load_config(path)


def test_dict_round_trip_defaults():
    rec = json.loads(make_config().to_json())
    cfg = config_from_dict(rec)
    assert cfg == make_config()
