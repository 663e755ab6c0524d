import logging
from typing import List, Sequence

from ..core.config import SimConfig
from ..core.errors import ConfigurationError
from ..core.rng import substream
from ..schemas.entities import EdgeServer, ServiceSpec
from ..schemas.trace import RawStationRecord

logger = logging.getLogger(__name__)


def make_servers(stations: Sequence[RawStationRecord], cfg: SimConfig, seed: int) -> List[EdgeServer]:
    """Turn in-region base stations into edge servers.

    Each surviving site draws an integer radius in [r_min, r_max] meters and
    three supply levels in [1, P]; ids follow input order.
    """
    inside = [st for st in stations if cfg.contains(st.pos.lon, st.pos.lat)]
    if not inside:
        raise ConfigurationError(
            message="No base station lies inside the configured region",
            error_code="no_stations_in_region",
            details={
                "stations": len(stations),
                "lon_range": [cfg.lambda_min, cfg.lambda_max],
                "lat_range": [cfg.phi_min, cfg.phi_max],
            },
        )
    rng = substream(seed, "servers")
    radii = rng.integers(cfg.r_min, cfg.r_max + 1, size=len(inside))
    supplies = rng.integers(1, cfg.p + 1, size=(len(inside), 3))
    servers = [
        EdgeServer(
            id=i,
            pos=st.pos,
            radius_m=int(radii[i]),
            supply_c=int(supplies[i, 0]),
            supply_s=int(supplies[i, 1]),
            supply_b=int(supplies[i, 2]),
        )
        for i, st in enumerate(inside)
    ]
    logger.info(f"Generated {len(servers)} edge servers from {len(stations)} stations")
    return servers


def make_services(cfg: SimConfig, seed: int) -> List[ServiceSpec]:
    """N_s services with uniform preference levels; sids stay distinct even for equal triples."""
    rng = substream(seed, "services")
    prefs = rng.integers(1, cfg.p + 1, size=(cfg.n_s, 3))
    return [
        ServiceSpec(sid=i, pref_c=int(row[0]), pref_s=int(row[1]), pref_b=int(row[2]))
        for i, row in enumerate(prefs)
    ]
