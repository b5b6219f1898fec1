import math

import pytest
from hypothesis import given, settings, strategies as st

from obvortex.config import SimConfig, format_config, parse_config, parse_config_text
from obvortex.errors import ConfigError


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = parse_config(p)
    assert (cfg.mu, cfg.kappa, cfg.lam, cfg.alpha, cfg.eps_B) == (0.15, 1.0, 0.15, 0.005, 0.05)
    assert cfg.L == 2 * math.pi and cfg.s == 0.05 * math.pi
    assert (cfg.dt, cfg.T) == (0.1, 120.0)
    assert cfg.sb == pytest.approx(0.1 * cfg.s)
    assert cfg.snapshots == (0.0, 40.0, 80.0, 120.0)
    assert cfg.rho0 == 1.0 and cfg.truncation == 100.0


def test_override_single_key():
    cfg = parse_config_text("dt = 0.05\n")
    assert cfg.dt == 0.05
    assert cfg.replace(dt=0.1) == SimConfig()


def test_range_error_names_key():
    with pytest.raises(ConfigError) as err:
        parse_config_text("# comment\nmu = -1\n")
    assert err.value.key == "mu" and err.value.line == 2


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("nu = 1")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("mu = 1\nmu = 2")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("mu = 1\nkappa 2")


def test_expressions_and_auto():
    cfg = parse_config_text("s = 0.2 * pi\ns_b = auto\nlambda = 0.3\nfreeze_rho = true\n"
                            "snapshot_times = 0, 6, 12\nT = 12")
    assert cfg.s == pytest.approx(0.2 * math.pi)
    assert cfg.s_b is None and cfg.lam == 0.3 and cfg.freeze_rho
    assert cfg.snapshots == (0.0, 6.0, 12.0)


def test_geometry_checks():
    with pytest.raises(ConfigError) as err:
        SimConfig(s_b=0.03 * math.pi)
    assert err.value.key == "s_b"
    with pytest.raises(ConfigError):
        SimConfig(s=0.3)
    with pytest.raises(ConfigError):
        SimConfig(weight_convention="other")


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0, 5), dt=st.sampled_from([0.05, 0.1, 0.2]), seed=st.integers(0, 2**32),
       ncp=st.integers(1, 64), flag=st.booleans())
def test_round_trip(mu, dt, seed, ncp, flag):
    cfg = SimConfig(mu=mu, dt=dt, seed=seed, N_copies=ncp, freeze_rho=flag, T=12.0)
    assert parse_config_text(format_config(cfg)) == cfg
