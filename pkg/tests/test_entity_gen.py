import math

import numpy as np
import pytest

from chestnut.core.config import load_config
from chestnut.core.errors import ConfigurationError
from chestnut.schemas.geo import GeoPoint
from chestnut.schemas.trace import RawStationRecord
from chestnut.services.entity_gen import make_servers, make_services
from chestnut.services.trace_ingest import synth_stations


def _station(lon, lat):
    return RawStationRecord(pos=GeoPoint(lon=lon, lat=lat))


@pytest.mark.unit
def test_servers_keep_in_region_stations_in_order(cfg):
    stations = [_station(121.3, 31.1), _station(120.0, 31.1), _station(121.5, 31.3), _station(121.64, 31.372)]
    servers = make_servers(stations, cfg, seed=1)
    assert [e.id for e in servers] == [0, 1, 2]
    assert [(e.pos.lon, e.pos.lat) for e in servers] == [(121.3, 31.1), (121.5, 31.3), (121.64, 31.372)]


@pytest.mark.unit
def test_server_attributes_within_ranges(cfg):
    servers = make_servers(synth_stations(cfg, 400, seed=2), cfg, seed=2)
    assert all(cfg.r_min <= e.radius_m <= cfg.r_max for e in servers)
    assert all(1 <= level <= cfg.p for e in servers for level in e.supply)
    assert servers == make_servers(synth_stations(cfg, 400, seed=2), cfg, seed=2)


@pytest.mark.unit
@pytest.mark.edge_cases
def test_no_station_in_region_is_a_configuration_error(cfg):
    with pytest.raises(ConfigurationError) as exc:
        make_servers([_station(0.0, 0.0)], cfg, seed=1)
    assert exc.value.error_code == "no_stations_in_region"
    assert exc.value.details["stations"] == 1


@pytest.mark.unit
def test_services(cfg):
    services = make_services(cfg, seed=5)
    assert [s.sid for s in services] == list(range(cfg.n_s))
    assert all(1 <= level <= cfg.p for s in services for level in s.prefs)
    assert services == make_services(cfg, seed=5)
    assert services != make_services(cfg, seed=6)


@pytest.mark.unit
def test_single_level_gives_uniform_entities():
    cfg = load_config(p=1, n_s=5)
    assert all(s.prefs == (1, 1, 1) for s in make_services(cfg, seed=0))


def _max_level_deviation(levels, p):
    """Largest |count - n/p| over levels 1..p, in binomial standard deviations."""
    counts = np.bincount(np.asarray(levels), minlength=p + 1)[1:]
    n = len(levels)
    sigma = math.sqrt(n * (1 / p) * (1 - 1 / p))
    return float(np.abs(counts - n / p).max() / sigma)


@pytest.mark.unit
@pytest.mark.slow
def test_levels_are_uniform_over_many_draws():
    cfg = load_config(p=5, n_s=10_000)
    services = make_services(cfg, seed=11)
    for column in range(3):
        assert _max_level_deviation([s.prefs[column] for s in services], cfg.p) <= 3.0

    lons = np.linspace(cfg.lambda_min + 0.01, cfg.lambda_max - 0.01, 100)
    lats = np.linspace(cfg.phi_min + 0.01, cfg.phi_max - 0.01, 100)
    stations = [_station(float(lon), float(lat)) for lon in lons for lat in lats]
    servers = make_servers(stations, cfg, seed=11)
    assert len(servers) == 10_000
    for column in range(3):
        assert _max_level_deviation([e.supply[column] for e in servers], cfg.p) <= 3.0


@pytest.mark.unit
@pytest.mark.edge_cases
def test_single_level_servers():
    cfg = load_config(p=1)
    servers = make_servers([_station(121.3, 31.1), _station(121.5, 31.3)], cfg, seed=4)
    assert [e.supply for e in servers] == [(1, 1, 1), (1, 1, 1)]
