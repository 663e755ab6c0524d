"""
Response time and network jitter models.

Per-invocation raw components are computed while the timestamp loop runs;
everything that normalizes over the whole dataset (min-max columns, the
simulation delay, jitter, edge perturbation) runs afterwards on full columns.
"""
import logging
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.config import BearingConvention, DownlinkDenominator, SimConfig
from ..core.errors import (
    InternalError,
    PerturbationLookupError,
    create_empty_column_error,
    create_level_error,
)
from ..core.rng import substream
from ..schemas.entities import EdgeServer, ServiceSpec
from ..schemas.geo import EARTH_RADIUS_M, SPEED_OF_LIGHT, GeoPoint
from ..schemas.invocation import ColumnBounds
from ..schemas.load import LoadState
from ..schemas.mobility import UserSnapshot
from ..schemas.qos import RawDelayComponents, RawJitterFactors
from .geo import extrapolate, extrapolate_coords, haversine, haversine_many
from .load_sim import mean_abs_change, mean_change

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TANH_SPREAD = 4.0
TANH_SHIFT = 2.0


# --- Response time: raw components ---

def request_propagation(user_pos: GeoPoint, server_pos: GeoPoint, radius_m: float = EARTH_RADIUS_M) -> float:
    return haversine(user_pos, server_pos, radius_m) / SPEED_OF_LIGHT


def _geometric_level(level: int, cfg: SimConfig, kind: str, base: float) -> float:
    if not 1 <= level <= cfg.p:
        raise create_level_error(kind, level, cfg.p)
    return base * 4.0 ** (level - 1)


def packet_size(level: int, cfg: SimConfig) -> float:
    """Request/response size in MB for a bandwidth preference level."""
    return _geometric_level(level, cfg, "bandwidth_preference", cfg.b_c)


def server_bandwidth(level: int, cfg: SimConfig) -> float:
    """Server bandwidth in Mbps for a bandwidth supply level."""
    return _geometric_level(level, cfg, "bandwidth_supply", cfg.b_e)


def uplink_share(server: EdgeServer, state: LoadState, arrivals: Sequence[ServiceSpec],
                 target: ServiceSpec, cfg: SimConfig) -> float:
    """Remaining bandwidth split among arrivals in inverse proportion to packet size."""
    if not any(s.sid == target.sid for s in arrivals):
        raise InternalError(
            message=f"Service {target.sid} is not among the arrivals of server {server.id}",
            error_code="uplink_target_absent",
            details={"eid": server.id, "sid": target.sid, "arrivals": len(arrivals)},
        )
    remaining = (1.0 - state.rho_b) * server_bandwidth(server.supply_b, cfg)
    inverse_total = sum(1.0 / packet_size(s.pref_b, cfg) for s in arrivals)
    return remaining * (1.0 / packet_size(target.pref_b, cfg)) / inverse_total


def transmission_delays(size_mb: float, up_share: float, state: LoadState, server: EdgeServer,
                        cfg: SimConfig) -> Tuple[float, float]:
    """(uplink, downlink) seconds for a packet of size_mb."""
    bits = 8.0 * size_mb
    if cfg.downlink_denominator == DownlinkDenominator.PAPER_LITERAL:
        downlink_capacity = state.rho_b
    else:
        downlink_capacity = server_bandwidth(server.supply_b, cfg)
    return bits / up_share, bits / downlink_capacity


def queueing_delay(state: LoadState) -> float:
    """Sum over resources of the M/M/1 sojourn rho / (mu (1 - rho)), mu = exp(-mean |d rho|)."""
    total = 0.0
    for i, rho in enumerate(state.rho):
        delta = mean_abs_change([h[i] for h in state.history])
        mu = np.exp(-delta)
        total += rho / (mu * (1.0 - rho))
    return float(total)


def processing_delay(server: EdgeServer, service: ServiceSpec, state: LoadState) -> float:
    m_c = server.supply_c * (1.0 - state.rho_c) / service.pref_c
    m_s = server.supply_s * (1.0 - state.rho_s) / service.pref_s
    return (1.0 + state.rho_c) / m_c + (1.0 + state.rho_s) / m_s


def raw_delay_components(snapshot: UserSnapshot, server: EdgeServer, service: ServiceSpec,
                         state: LoadState, arrivals: Sequence[ServiceSpec], cfg: SimConfig) -> RawDelayComponents:
    size = packet_size(service.pref_b, cfg)
    share = uplink_share(server, state, arrivals, service, cfg)
    uplink, downlink = transmission_delays(size, share, state, server, cfg)
    return RawDelayComponents(
        pg_req=request_propagation(snapshot.pos, server.pos, cfg.earth_radius_m),
        uplink=uplink,
        queueing=queueing_delay(state),
        processing=processing_delay(server, service, state),
        downlink=downlink,
    )


# --- Dataset-wide passes ---

def minmax_normalize(values: Iterable[float], column: str = "value") -> Tuple[np.ndarray, ColumnBounds]:
    """Scale a full column into [0, 1]; a constant column maps to zeros."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if arr.size == 0:
        raise create_empty_column_error(column)
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return np.zeros_like(arr), ColumnBounds(min=lo, max=hi, constant=True)
    return (arr - lo) / (hi - lo), ColumnBounds(min=lo, max=hi)


def squash(m: ArrayLike, base: float) -> ArrayLike:
    """(tanh(4m - 2) + 1) * base: maps [0, 1] into (0, 2 * base)."""
    return (np.tanh(TANH_SPREAD * np.asarray(m, dtype=float) - TANH_SHIFT) + 1.0) * base


def simulation_delay(u_hat: np.ndarray, q_hat: np.ndarray, p_hat: np.ndarray, d_hat: np.ndarray,
                     theta_rt: float) -> Tuple[np.ndarray, ColumnBounds]:
    """Simulation delay per record from the four normalized delay columns."""
    m_sum, bounds = minmax_normalize(u_hat + q_hat + p_hat + d_hat, "delay_sum")
    return squash(m_sum, theta_rt), bounds


def response_propagation(snapshot: UserSnapshot, pg_req: float, sd: float,
                         cfg: SimConfig) -> float:
    """Distance from the user to where it will be when the response returns, over c."""
    distance = snapshot.speed_kmh * 1000.0 / 3600.0 * (pg_req + sd)
    predicted = extrapolate(snapshot.pos, snapshot.direction_deg, distance, cfg.bearing_convention)
    return haversine(snapshot.pos, predicted, cfg.earth_radius_m) / SPEED_OF_LIGHT


def response_propagation_many(lon: np.ndarray, lat: np.ndarray, direction_deg: np.ndarray,
                              speed_kmh: np.ndarray, pg_req: np.ndarray, sd: np.ndarray,
                              convention: BearingConvention = BearingConvention.PAPER,
                              radius_m: float = EARTH_RADIUS_M) -> np.ndarray:
    distance = np.asarray(speed_kmh, dtype=float) * 1000.0 / 3600.0 * (pg_req + sd)
    new_lon, new_lat = extrapolate_coords(lon, lat, direction_deg, distance, convention)
    return haversine_many(lon, lat, new_lon, np.clip(new_lat, -90.0, 90.0), radius_m) / SPEED_OF_LIGHT


def response_time(pg_req: ArrayLike, sd: ArrayLike, pg_rep: ArrayLike) -> ArrayLike:
    return pg_req + sd + pg_rep


# --- Network jitter ---

def jitter_factors(user_window: Sequence[UserSnapshot], state: LoadState, server: EdgeServer,
                   service: ServiceSpec, cfg: SimConfig) -> RawJitterFactors:
    """Raw jitter factors for the last snapshot of user_window (up to k snapshots ending at t)."""
    current = user_window[-1]
    remaining_b = (1.0 - state.rho_b) * server.supply_b
    return RawJitterFactors(
        trend=mean_change([h[2] for h in state.history]),
        dist_ratio=haversine(current.pos, server.pos, cfg.earth_radius_m) / server.radius_m,
        dir_change=mean_abs_change([s.direction_deg for s in user_window[-cfg.k:]]),
        bw_ratio=service.pref_b / remaining_b,
        speed_kmh=current.speed_kmh,
    )


def network_jitter(trend: np.ndarray, m_dist: np.ndarray, m_dir: np.ndarray, m_bw: np.ndarray,
                   m_speed: np.ndarray, theta_nj: float) -> Tuple[np.ndarray, ColumnBounds]:
    """Jitter in ms from the signed trend and the four normalized factor columns."""
    sigma = np.exp(1.0 + np.asarray(trend, dtype=float)) * (m_dist + m_dir + m_bw + m_speed)
    m_sigma, bounds = minmax_normalize(sigma, "jitter_sum")
    return squash(m_sigma, theta_nj), bounds


# --- Perturbation ---

class PerturbationModel:
    """Fixed random feedforward map from (uid, eid, sid) to a perturbation in [0, 0.2].

    Inputs are scaled ids, lifted by 16 random sinusoidal features, passed
    through one tanh layer of 32 units and a linear output. The raw outputs
    are min-max normalized over the fitted triples and scaled by 0.2.
    """

    N_FEATURES = 16
    N_HIDDEN = 32
    SCALE = 0.2

    def __init__(self, seed: int, n_u: int, n_e: int, n_s: int):
        self.sizes = np.array([max(n_u, 1), max(n_e, 1), max(n_s, 1)], dtype=float)
        rng = substream(seed, "perturbation")
        self.w0 = rng.normal(0.0, 2.0, size=(self.N_FEATURES, 3))
        self.b0 = rng.uniform(0.0, 2.0 * np.pi, size=self.N_FEATURES)
        limit = np.sqrt(6.0 / (self.N_FEATURES + self.N_HIDDEN))
        self.w1 = rng.uniform(-limit, limit, size=(self.N_HIDDEN, self.N_FEATURES))
        self.b1 = np.zeros(self.N_HIDDEN)
        limit = np.sqrt(6.0 / (self.N_HIDDEN + 1))
        self.w2 = rng.uniform(-limit, limit, size=self.N_HIDDEN)
        self.b2 = 0.0
        self._values: Dict[Tuple[int, int, int], float] = {}
        self.bounds: Optional[ColumnBounds] = None

    def raw(self, triples: np.ndarray) -> np.ndarray:
        x = np.asarray(triples, dtype=float).reshape(-1, 3) / self.sizes
        h0 = np.sin(x @ self.w0.T + self.b0)
        h1 = np.tanh(h0 @ self.w1.T + self.b1)
        return h1 @ self.w2 + self.b2

    def fit(self, triples: Iterable[Tuple[int, int, int]]) -> "PerturbationModel":
        unique = sorted(set((int(u), int(e), int(s)) for u, e, s in triples))
        if not unique:
            self._values = {}
            self.bounds = None
            return self
        normalized, self.bounds = minmax_normalize(self.raw(np.array(unique)), "edge_perturbation")
        self._values = {t: float(v) * self.SCALE for t, v in zip(unique, normalized)}
        logger.debug(f"Perturbation model fitted on {len(unique)} triples")
        return self

    def edge_perturbation(self, uid: int, eid: int, sid: int) -> float:
        key = (int(uid), int(eid), int(sid))
        try:
            return self._values[key]
        except KeyError:
            raise PerturbationLookupError(
                message=f"Triple {key} was not seen when the perturbation model was fitted",
                error_code="perturbation_triple_unknown",
                details={"uid": key[0], "eid": key[1], "sid": key[2]},
            ) from None

    def edge_perturbation_many(self, uids: np.ndarray, eids: np.ndarray, sids: np.ndarray) -> np.ndarray:
        return np.array([self.edge_perturbation(u, e, s) for u, e, s in zip(uids, eids, sids)], dtype=float)


def time_perturbation(t: ArrayLike) -> ArrayLike:
    return 0.1 * (np.sin(np.asarray(t, dtype=float) / 2.0) + 1.0)


def finalize_qos(rt: ArrayLike, j: ArrayLike, delta_edge: ArrayLike, delta_time: ArrayLike):
    """Apply the shared multiplier 1 + delta_edge + delta_time to both QoS values."""
    multiplier = 1.0 + np.asarray(delta_edge, dtype=float) + np.asarray(delta_time, dtype=float)
    return rt * multiplier, j * multiplier
