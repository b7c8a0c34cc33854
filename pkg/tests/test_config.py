import numpy as np
import pytest

from pointsynth.config import RunConfig, load_config, resolved_toml, to_synthesis_config
from pointsynth.wavelets import default_xi0


def test_defaults_resolve():
    cfg = RunConfig()
    assert cfg.N == 64
    assert cfg.J == 3
    assert cfg.xi0 == default_xi0()
    assert cfg.method == "gd-wph"
    assert RunConfig(N=256).J == 5


def test_validation():
    with pytest.raises(ValueError):
        RunConfig(N=48)
    with pytest.raises(ValueError):
        RunConfig(method="simulated-annealing")
    with pytest.raises(ValueError):
        RunConfig(n_outputs=0)
    with pytest.raises(ValueError):
        RunConfig(iterations_per_stage=0)


def test_load_from_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('N = 32\nmethod = "rs-nnd"\nseed = 7\nfinal_blur = false\n')
    cfg = load_config(path)
    assert cfg.N == 32
    assert cfg.method == "rs-nnd"
    assert cfg.seed == 7
    assert cfg.final_blur is False
    assert cfg.L == 8  # untouched default


def test_load_empty_and_missing(tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("")
    assert load_config(path) == RunConfig()
    assert load_config(None) == RunConfig()


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "typo.toml"
    path.write_text("iterations = 50\n")
    with pytest.raises(ValueError, match="iterations"):
        load_config(path)


def test_overrides_win(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("seed = 3\nN = 32\n")
    cfg = load_config(path, seed=11, J=None)
    assert cfg.seed == 11
    assert cfg.N == 32
    assert cfg.J == 2  # None override is ignored, default formula applies


def test_resolved_toml_roundtrip(tmp_path):
    cfg = RunConfig(N=32, method="rs-wph", target_relative_energy=1e-3, seed=4)
    text = resolved_toml(cfg)
    path = tmp_path / "resolved.toml"
    path.write_text(text)
    back = load_config(path)
    assert back == cfg
    # resolved output pins the derived fields explicitly
    assert "J = 2" in text
    assert "xi0 = " in text


def test_to_synthesis_config_schedules():
    cfg = RunConfig(N=32, J=3, iterations_per_stage=40)
    syn = to_synthesis_config(cfg)
    assert len(syn.schedule.sigmas) == 3
    assert syn.schedule.iterations_per_stage == 40
    assert syn.seed == cfg.seed
    assert to_synthesis_config(cfg, seed=9).seed == 9

    flat = to_synthesis_config(RunConfig(N=32, multiscale=False))
    assert flat.schedule.sigmas == (0.5 / 32,)


def test_to_synthesis_config_passthrough():
    cfg = RunConfig(
        N=16,
        J=1,
        L=4,
        second_order_only=True,
        kernel_exponent="variance",
        truncation_radius_sigmas=6.0,
        target_relative_energy=5e-4,
    )
    syn = to_synthesis_config(cfg)
    assert syn.L == 4
    assert syn.second_order_only is True
    assert syn.kernel_exponent == "variance"
    assert syn.truncation_radius_sigmas == 6.0
    assert syn.target_relative_energy == 5e-4
