"""
Temporal alignment of raw traces onto system timestamps and selection of the
most active vehicles as users.
"""
import logging
from dataclasses import dataclass, field
from itertools import groupby
from typing import Dict, List, Mapping, Sequence, Tuple, Union

from ..core.config import SimConfig
from ..core.errors import create_selection_error
from ..schemas.entities import EdgeServer
from ..schemas.geo import EARTH_RADIUS_M
from ..schemas.mobility import ActivityProfile, UserSnapshot
from ..schemas.trace import RawGpsRecord
from .coverage import CoverageIndex
from .geo import haversine

logger = logging.getLogger(__name__)

VehicleProfiles = Mapping[str, Tuple[List[UserSnapshot], ActivityProfile]]


def group_by_vehicle(records: Sequence[RawGpsRecord]) -> Dict[str, List[RawGpsRecord]]:
    """Group records (sorted by vehicle, time) into per-vehicle lists, keys in sorted order."""
    ordered = sorted(records, key=lambda r: (r.vehicle_id, r.gps_time))
    return {vid: list(group) for vid, group in groupby(ordered, key=lambda r: r.vehicle_id)}


def align_vehicle(records: Sequence[RawGpsRecord], cfg: SimConfig, uid: int = 0) -> List[UserSnapshot]:
    """Snapshot one vehicle every delta_t seconds of its own clock.

    Window w covers [w*dt, (w+1)*dt) after the first fix; the last fix in a
    window becomes timestamp w. Fixes later than t_max are discarded.
    """
    if not records:
        return []
    t0 = records[0].gps_time
    last_in_window: Dict[int, RawGpsRecord] = {}
    for r in records:
        local = r.gps_time - t0
        if local > cfg.t_max:
            break
        w = int(local // cfg.delta_t)
        if w > cfg.max_timestamp:
            break
        last_in_window[w] = r
    return [
        UserSnapshot(uid=uid, t=w, pos=r.pos, speed_kmh=r.speed_kmh, direction_deg=r.direction_deg)
        for w, r in sorted(last_in_window.items())
    ]


def align(records: Mapping[str, Sequence[RawGpsRecord]], cfg: SimConfig) -> Dict[str, List[UserSnapshot]]:
    """Align every vehicle; vehicles without records are skipped.

    Snapshot uids are provisional (vehicle ordinal) until select_users reindexes them.
    """
    aligned: Dict[str, List[UserSnapshot]] = {}
    for ordinal, vehicle_id in enumerate(sorted(records)):
        snapshots = align_vehicle(records[vehicle_id], cfg, uid=ordinal)
        if snapshots:
            aligned[vehicle_id] = snapshots
    return aligned


def profile(user: Sequence[UserSnapshot], servers: Union[Sequence[EdgeServer], CoverageIndex],
            earth_radius_m: float = EARTH_RADIUS_M) -> ActivityProfile:
    index = servers if isinstance(servers, CoverageIndex) else CoverageIndex(servers, earth_radius_m)
    omegas = [index.count(s.pos.lon, s.pos.lat) for s in user]
    return ActivityProfile(
        tau=len(user),
        D=haversine(user[0].pos, user[-1].pos, index.earth_radius_m),
        sum_omega=sum(omegas),
        sum_nu=sum(1 for w in omegas if w >= 1),
    )


def longest_stationary_run(user: Sequence[UserSnapshot], epsilon: float = 0.0) -> int:
    """Length of the longest run of consecutive snapshots at the same position."""
    if not user:
        return 0
    best = run = 1
    for prev, cur in zip(user, user[1:]):
        same = (abs(cur.pos.lon - prev.pos.lon) <= epsilon and abs(cur.pos.lat - prev.pos.lat) <= epsilon)
        run = run + 1 if same else 1
        best = max(best, run)
    return best


@dataclass
class Screening:
    """Vehicles surviving the filters, best first."""
    ranked: List[str] = field(default_factory=list)
    excluded_stationary: int = 0
    excluded_c_min: int = 0


def screen_vehicles(profiles: VehicleProfiles, cfg: SimConfig) -> Screening:
    screening = Screening()
    survivors = []
    for vehicle_id, (snapshots, prof) in profiles.items():
        if longest_stationary_run(snapshots, cfg.stationary_epsilon) > cfg.s:
            screening.excluded_stationary += 1
            continue
        if prof.tau < cfg.c_min:
            screening.excluded_c_min += 1
            continue
        survivors.append(vehicle_id)
    # Descending on the ranking tuple; ties fall back to ascending vehicle id.
    survivors.sort(key=lambda vid: (
        tuple(-x for x in profiles[vid][1].rank_key()),
        vid,
    ))
    screening.ranked = survivors
    return screening


def select_users(profiles: VehicleProfiles, cfg: SimConfig) -> List[UserSnapshot]:
    """Top N_u vehicles, reindexed 0..N_u-1 by rank; raises SelectionError on shortfall."""
    screening = screen_vehicles(profiles, cfg)
    logger.info(
        f"Selection: {len(screening.ranked)} survivors, "
        f"{screening.excluded_stationary} stationary, {screening.excluded_c_min} below c_min"
    )
    if len(screening.ranked) < cfg.n_u:
        raise create_selection_error(cfg.n_u, len(screening.ranked))
    users: List[UserSnapshot] = []
    for uid, vehicle_id in enumerate(screening.ranked[:cfg.n_u]):
        users.extend(s.model_copy(update={"uid": uid}) for s in profiles[vehicle_id][0])
    return users
