"""Great-circle distance and dead-reckoning extrapolation.

The scalar functions take GeoPoints; the *_many / *_coords variants accept
numpy arrays and are used for coverage scans and column passes.
"""
import math
from typing import Union

import numpy as np

from ..core.config import BearingConvention
from ..schemas.geo import EARTH_RADIUS_M, METERS_PER_DEGREE, GeoPoint

ArrayLike = Union[float, np.ndarray]


def haversine(p1: GeoPoint, p2: GeoPoint, radius_m: float = EARTH_RADIUS_M) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = math.radians(p1.lat)
    phi2 = math.radians(p2.lat)
    dphi = phi2 - phi1
    dlam = math.radians(p2.lon - p1.lon)
    hav = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    hav = min(1.0, max(0.0, hav))
    return 2.0 * radius_m * math.asin(math.sqrt(hav))


def haversine_many(lon1: ArrayLike, lat1: ArrayLike, lon2: ArrayLike, lat2: ArrayLike,
                   radius_m: float = EARTH_RADIUS_M) -> np.ndarray:
    """Vectorized haversine over broadcastable coordinate arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.subtract(lon2, lon1))
    hav = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2.0 * radius_m * np.arcsin(np.sqrt(np.clip(hav, 0.0, 1.0)))


def extrapolate_coords(lon: ArrayLike, lat: ArrayLike, direction_deg: ArrayLike, distance_m: ArrayLike,
                       convention: BearingConvention = BearingConvention.PAPER):
    """Flat-earth displacement of (lon, lat) by distance_m along direction_deg.

    PAPER assigns cos to longitude and sin to latitude, both over a fixed
    111,320 m per degree. NORTH_REFERENCED treats the direction as a compass
    bearing and shrinks longitude degrees by cos(lat).
    """
    theta = np.radians(direction_deg)
    if convention == BearingConvention.NORTH_REFERENCED:
        new_lat = lat + distance_m * np.cos(theta) / METERS_PER_DEGREE
        new_lon = lon + distance_m * np.sin(theta) / (METERS_PER_DEGREE * np.cos(np.radians(lat)))
    else:
        new_lon = lon + distance_m * np.cos(theta) / METERS_PER_DEGREE
        new_lat = lat + distance_m * np.sin(theta) / METERS_PER_DEGREE
    return new_lon, new_lat


def extrapolate(p: GeoPoint, direction_deg: float, distance_m: float,
                convention: BearingConvention = BearingConvention.PAPER) -> GeoPoint:
    """Predicted position after moving distance_m meters along direction_deg."""
    if distance_m == 0:
        return p
    lon, lat = extrapolate_coords(p.lon, p.lat, direction_deg, distance_m, convention)
    return GeoPoint(lon=float(lon), lat=float(np.clip(lat, -90.0, 90.0)))
