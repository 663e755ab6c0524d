import pytest

from chestnut.core.config import SimConfig, load_config
from chestnut.schemas.entities import EdgeServer, ServiceSpec
from chestnut.schemas.geo import GeoPoint
from chestnut.services.pipeline import run

# Desk-scale run: 50 synthetic vehicles over one hour, with fewer users than
# the full-scale default so the synthetic fleet can satisfy the selection.
DESK_OVERRIDES = dict(n_vehicles=50, n_stations=600, n_u=20, seed=7, progress=False)


@pytest.fixture
def cfg() -> SimConfig:
    """Default parameters without progress output."""
    return load_config(progress=False)


@pytest.fixture
def small_cfg() -> SimConfig:
    return load_config(n_u=3, n_s=4, c_min=2, t_max=300, delta_t=30, progress=False)


@pytest.fixture
def server() -> EdgeServer:
    return EdgeServer(id=0, pos=GeoPoint(lon=121.45, lat=31.2), radius_m=1000,
                      supply_c=2, supply_s=2, supply_b=1)


@pytest.fixture
def service() -> ServiceSpec:
    return ServiceSpec(sid=0, pref_c=1, pref_s=1, pref_b=1)


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """One desk-scale generation shared by the integration tests."""
    out_dir = tmp_path_factory.mktemp("desk") / "out"
    cfg = load_config(out_dir=out_dir, **DESK_OVERRIDES)
    manifest = run(cfg)
    return cfg, manifest, out_dir
