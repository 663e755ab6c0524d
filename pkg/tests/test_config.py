import pytest

from chestnut.core.config import InvocationMode, SimConfig, get_config, load_config, read_config_file
from chestnut.core.errors import ConfigurationError


@pytest.mark.unit
def test_defaults_follow_parameter_table(cfg):
    assert (cfg.phi_min, cfg.phi_max) == (31.050, 31.372)
    assert (cfg.lambda_min, cfg.lambda_max) == (121.259, 121.640)
    assert (cfg.r_min, cfg.r_max) == (600, 1200)
    assert (cfg.n_u, cfg.n_s, cfg.p) == (2000, 135, 3)
    assert (cfg.delta_t, cfg.t_max, cfg.c_min, cfg.s) == (30, 3600, 30, 3)
    assert (cfg.theta_rt, cfg.theta_nj, cfg.k) == (1.6, 160, 5)
    assert (cfg.b_c, cfg.b_e) == (0.5, 512)
    assert cfg.max_timestamp == 120
    assert cfg.invocation_mode == InvocationMode.SAMPLED


@pytest.mark.unit
def test_max_timestamp_floors():
    assert load_config(t_max=100, delta_t=30).max_timestamp == 3


@pytest.mark.unit
@pytest.mark.parametrize("overrides", [
    {"phi_min": 32.0},
    {"r_min": 1500},
    {"delta_t": 0},
    {"t_max": 10, "delta_t": 30},
    {"p": 0},
    {"rho_min": 0.5, "rho_max": 0.4},
    {"services_per_snapshot": 200},
])
def test_invalid_values_raise_configuration_error(overrides):
    with pytest.raises(ConfigurationError) as exc:
        load_config(**overrides)
    assert exc.value.error_code == "config_invalid"
    assert exc.value.exit_code == 2


@pytest.mark.unit
def test_key_value_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("DELTA_T=60\nn_u = 10\n", encoding="utf-8")
    cfg = load_config(path, progress=False)
    assert cfg.delta_t == 60
    assert cfg.n_u == 10


@pytest.mark.unit
def test_yaml_file_and_override_priority(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 3\nn_u: 10\ninvocation_mode: full\n", encoding="utf-8")
    cfg = load_config(path, n_u=12)
    assert cfg.seed == 3
    assert cfg.n_u == 12
    assert cfg.invocation_mode == InvocationMode.FULL


@pytest.mark.unit
def test_environment_prefix(monkeypatch):
    monkeypatch.setenv("CHESTNUT_THETA_NJ", "100")
    assert SimConfig().theta_nj == 100


@pytest.mark.unit
def test_missing_and_non_mapping_files(tmp_path):
    with pytest.raises(ConfigurationError) as exc:
        read_config_file(tmp_path / "nope.yaml")
    assert exc.value.error_code == "config_not_found"

    path = tmp_path / "list.yml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError) as exc:
        read_config_file(path)
    assert exc.value.error_code == "config_not_mapping"


@pytest.mark.unit
def test_echo_excludes_runtime_only_fields(cfg):
    echo = cfg.echo()
    assert "out_dir" not in echo and "progress" not in echo
    assert echo["bearing_convention"] == "paper"


@pytest.mark.unit
def test_default_config_is_cached():
    get_config.cache_clear()
    assert get_config() is get_config()
    assert get_config().max_timestamp == 120
    get_config.cache_clear()
