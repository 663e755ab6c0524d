from typing import Sequence

import numpy as np

from ..schemas.entities import EdgeServer
from ..schemas.geo import EARTH_RADIUS_M
from .geo import haversine_many


class CoverageIndex:
    """Server positions and radii as arrays for repeated coverage scans."""

    def __init__(self, servers: Sequence[EdgeServer], earth_radius_m: float = EARTH_RADIUS_M):
        self.servers = list(servers)
        self.earth_radius_m = earth_radius_m
        self.lons = np.array([e.pos.lon for e in self.servers], dtype=float)
        self.lats = np.array([e.pos.lat for e in self.servers], dtype=float)
        self.radii = np.array([e.radius_m for e in self.servers], dtype=float)
        self.ids = np.array([e.id for e in self.servers], dtype=int)

    def __len__(self) -> int:
        return len(self.servers)

    def distances(self, lon: float, lat: float) -> np.ndarray:
        return haversine_many(lon, lat, self.lons, self.lats, self.earth_radius_m)

    def covering(self, lon: float, lat: float) -> np.ndarray:
        """Ids of servers whose radius reaches (lon, lat), ascending."""
        if not self.servers:
            return np.empty(0, dtype=int)
        return self.ids[self.distances(lon, lat) <= self.radii]

    def count(self, lon: float, lat: float) -> int:
        if not self.servers:
            return 0
        return int(np.count_nonzero(self.distances(lon, lat) <= self.radii))
