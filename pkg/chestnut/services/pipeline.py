"""
End-to-end dataset generation.

Stages: inputs -> edge servers and services -> aligned and selected users ->
timestamp loop (disturb loads, assign invocations, raw QoS components, step
loads) -> dataset-wide normalization and perturbation -> files.
"""
import logging
import os
import shutil
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..core.config import InvocationMode, SimConfig
from ..core.errors import ConfigurationError, ErrorHandler
from ..core.rng import substream
from ..schemas.entities import EdgeServer, ServiceSpec
from ..schemas.invocation import ColumnBounds, InvocationRecord, RunManifest
from ..schemas.load import DemandTotals
from ..schemas.mobility import UserSnapshot
from ..schemas.trace import RawGpsRecord, RawStationRecord
from . import export
from .coverage import CoverageIndex
from .entity_gen import make_servers, make_services
from .load_sim import initial_load, start_of_step_disturbance, step_load
from .mobility import align, group_by_vehicle, profile, screen_vehicles, select_users
from .qos_model import (
    PerturbationModel,
    finalize_qos,
    jitter_factors,
    minmax_normalize,
    network_jitter,
    raw_delay_components,
    response_propagation_many,
    response_time,
    simulation_delay,
    time_perturbation,
)
from .stats import emit_stats
from .trace_ingest import (
    gps_format_from_config,
    parse_gps_log,
    parse_stations,
    synth_stations,
    synth_traces,
)

logger = logging.getLogger(__name__)

Invocation = Tuple[int, int, int, int]

RAW_COLUMNS = [
    "uid", "eid", "sid", "timestamp", "lon", "lat", "direction",
    "pg_req", "uplink", "queueing", "processing", "downlink",
    "trend", "dist_ratio", "dir_change", "bw_ratio", "speed",
]
ID_COLUMNS = ["uid", "eid", "sid", "timestamp"]


@dataclass
class GenerationInputs:
    gps: List[RawGpsRecord]
    stations: List[RawStationRecord]
    dropped_rows: Dict[str, int] = field(default_factory=dict)


def load_inputs(cfg: SimConfig, gps_path: Optional[Union[str, Path]] = None,
                stations_path: Optional[Union[str, Path]] = None) -> GenerationInputs:
    """Parse the given trace and station files, or synthesize both when neither is given."""
    if gps_path is None and stations_path is None:
        return GenerationInputs(
            gps=synth_traces(cfg, cfg.n_vehicles, cfg.seed),
            stations=synth_stations(cfg, cfg.n_stations, cfg.seed),
            dropped_rows={"gps": 0, "stations": 0, "station_duplicates": 0},
        )
    if gps_path is None or stations_path is None:
        raise ConfigurationError(
            message="Both a GPS log and a station list are required (or neither, for synthetic inputs)",
            error_code="inputs_incomplete",
            details={"gps": str(gps_path) if gps_path else None,
                     "stations": str(stations_path) if stations_path else None},
        )
    gps = parse_gps_log(gps_path, gps_format_from_config(cfg))
    stations = parse_stations(stations_path, lon_col=cfg.stations_col_lon, lat_col=cfg.stations_col_lat,
                              has_header=cfg.stations_has_header)
    return GenerationInputs(
        gps=gps.records,
        stations=stations.records,
        dropped_rows={"gps": gps.dropped, "stations": stations.dropped,
                      "station_duplicates": stations.duplicates},
    )


def assign_invocations(snapshots: Sequence[UserSnapshot], index: CoverageIndex,
                       services: Sequence[ServiceSpec], cfg: SimConfig,
                       rng: np.random.Generator) -> List[Invocation]:
    """(uid, eid, sid, t) calls for the snapshots of one timestamp.

    Every call goes to a covering server drawn uniformly; snapshots outside
    all coverage produce nothing.
    """
    calls: List[Invocation] = []
    n_s = len(services)
    for snap in sorted(snapshots, key=lambda s: s.uid):
        covering = index.covering(snap.pos.lon, snap.pos.lat)
        if covering.size == 0:
            continue
        if cfg.invocation_mode == InvocationMode.FULL:
            sids = np.arange(n_s)
        else:
            m = min(cfg.services_per_snapshot, n_s)
            sids = np.sort(rng.choice(n_s, size=m, replace=False))
        for sid in sids:
            eid = int(covering[rng.integers(covering.size)])
            calls.append((snap.uid, eid, services[int(sid)].sid, snap.t))
    return calls


class RawComponentBuffer:
    """Row buffer for raw per-invocation components that spills to .npy chunks."""

    def __init__(self, threshold: int, spill_dir: Path):
        self.threshold = threshold
        self.spill_dir = Path(spill_dir)
        self.rows: List[tuple] = []
        self.chunks: List[Path] = []
        self.count = 0

    def append(self, record: InvocationRecord, snap: UserSnapshot) -> None:
        d, j = record.delay, record.jitter
        self.rows.append((
            record.uid, record.eid, record.sid, record.t, snap.pos.lon, snap.pos.lat, snap.direction_deg,
            d.pg_req, d.uplink, d.queueing, d.processing, d.downlink,
            j.trend, j.dist_ratio, j.dir_change, j.bw_ratio, j.speed_kmh,
        ))
        self.count += 1
        if len(self.rows) >= self.threshold:
            self._spill()

    def _spill(self) -> None:
        path = self.spill_dir / f"raw_{len(self.chunks):05d}.npy"
        np.save(path, np.array(self.rows, dtype=float))
        self.chunks.append(path)
        self.rows = []
        logger.debug(f"Spilled raw components chunk {path.name}")

    def __len__(self) -> int:
        return self.count

    def to_frame(self) -> pd.DataFrame:
        arrays = [np.load(p) for p in self.chunks]
        if self.rows:
            arrays.append(np.array(self.rows, dtype=float))
        data = np.vstack(arrays) if arrays else np.empty((0, len(RAW_COLUMNS)))
        df = pd.DataFrame(data, columns=RAW_COLUMNS)
        df[ID_COLUMNS] = df[ID_COLUMNS].astype(np.int64)
        return df


@dataclass
class Simulation:
    raw: pd.DataFrame
    load_rows: List[tuple]


def simulate(cfg: SimConfig, users: Sequence[UserSnapshot], servers: Sequence[EdgeServer],
             services: Sequence[ServiceSpec], index: CoverageIndex, spill_dir: Path) -> Simulation:
    """Timestamp loop: loads evolve, invocations are assigned and raw components recorded."""
    seed = cfg.seed
    by_t: Dict[int, Dict[int, UserSnapshot]] = defaultdict(dict)
    trail: Dict[int, List[UserSnapshot]] = defaultdict(list)
    for snap in sorted(users, key=lambda s: (s.uid, s.t)):
        by_t[snap.t][snap.uid] = snap
        trail[snap.uid].append(snap)
    trail_pos = {(s.uid, s.t): i for uid_snaps in trail.values() for i, s in enumerate(uid_snaps)}

    server_by_id = {e.id: e for e in servers}
    service_by_id = {s.sid: s for s in services}
    load_rngs = {e.id: substream(seed, "load", e.id) for e in servers}
    states = {e.id: initial_load(e, cfg, load_rngs[e.id]) for e in servers}

    buffer = RawComponentBuffer(cfg.spill_threshold, spill_dir)
    load_rows: List[tuple] = []
    timestamps = range(cfg.max_timestamp + 1)
    for t in tqdm(timestamps, desc="timestamps", unit="t", disable=not cfg.progress):
        for eid in server_by_id:
            states[eid] = start_of_step_disturbance(states[eid], load_rngs[eid], cfg)
            load_rows.append((t, eid, *states[eid].rho))

        snapshots = by_t.get(t, {})
        calls = assign_invocations(list(snapshots.values()), index, services, cfg, substream(seed, "assign", t))

        arrivals: Dict[int, List[ServiceSpec]] = defaultdict(list)
        demand: Dict[int, DemandTotals] = defaultdict(DemandTotals)
        for _, eid, sid, _ in calls:
            service = service_by_id[sid]
            arrivals[eid].append(service)
            demand[eid] = demand[eid].add(service.prefs)

        for uid, eid, sid, _ in calls:
            snap = snapshots[uid]
            server = server_by_id[eid]
            service = service_by_id[sid]
            state = states[eid]
            pos = trail_pos[(uid, t)]
            window = trail[uid][max(0, pos - cfg.k + 1):pos + 1]
            buffer.append(InvocationRecord(
                uid=uid, eid=eid, sid=sid, t=t,
                delay=raw_delay_components(snap, server, service, state, arrivals[eid], cfg),
                jitter=jitter_factors(window, state, server, service, cfg),
            ), snap)

        for eid, server in server_by_id.items():
            states[eid] = step_load(states[eid], server, demand.get(eid, DemandTotals()), load_rngs[eid], cfg)

    logger.info(f"Simulated {len(timestamps)} timestamps, {len(buffer)} invocations")
    return Simulation(raw=buffer.to_frame(), load_rows=load_rows)


@dataclass
class Finalized:
    invocations: pd.DataFrame
    components: pd.DataFrame
    normalization: Dict[str, ColumnBounds]
    perturbation_bounds: Optional[ColumnBounds]


def finalize(raw: pd.DataFrame, cfg: SimConfig, n_u: int, n_e: int, n_s: int) -> Finalized:
    """Second pass over complete columns: normalization, SD, jitter, perturbation."""
    if raw.empty:
        empty = pd.DataFrame(columns=export.INVOCATION_COLUMNS)
        return Finalized(empty, pd.DataFrame(columns=export.COMPONENT_COLUMNS), {}, None)

    norm: Dict[str, ColumnBounds] = {}
    hat: Dict[str, np.ndarray] = {}
    for col in ("uplink", "queueing", "processing", "downlink", "dist_ratio", "dir_change", "bw_ratio", "speed"):
        hat[col], norm[col] = minmax_normalize(raw[col].to_numpy(dtype=float), col)

    sd, norm["delay_sum"] = simulation_delay(hat["uplink"], hat["queueing"], hat["processing"],
                                             hat["downlink"], cfg.theta_rt)
    pg_req = raw["pg_req"].to_numpy(dtype=float)
    pg_rep = response_propagation_many(
        raw["lon"].to_numpy(dtype=float), raw["lat"].to_numpy(dtype=float),
        raw["direction"].to_numpy(dtype=float), raw["speed"].to_numpy(dtype=float),
        pg_req, sd, cfg.bearing_convention, cfg.earth_radius_m,
    )
    rt_base = response_time(pg_req, sd, pg_rep)
    nj_base, norm["jitter_sum"] = network_jitter(
        raw["trend"].to_numpy(dtype=float), hat["dist_ratio"], hat["dir_change"], hat["bw_ratio"],
        hat["speed"], cfg.theta_nj,
    )

    model = PerturbationModel(cfg.seed, n_u, n_e, n_s).fit(raw[["uid", "eid", "sid"]].itertuples(index=False))
    delta_edge = model.edge_perturbation_many(raw["uid"], raw["eid"], raw["sid"])
    delta_time = time_perturbation(raw["timestamp"].to_numpy(dtype=float))
    rt, nj = finalize_qos(rt_base, nj_base, delta_edge, delta_time)

    invocations = raw[ID_COLUMNS].copy()
    invocations["rt"] = rt
    invocations["nj"] = nj
    components = pd.DataFrame({
        "pg_req": pg_req,
        "uplink": raw["uplink"], "queueing": raw["queueing"],
        "processing": raw["processing"], "downlink": raw["downlink"],
        "sd": sd, "pg_rep": pg_rep, "rt_base": rt_base,
        "trend": raw["trend"], "dist_ratio": raw["dist_ratio"], "dir_change": raw["dir_change"],
        "bw_ratio": raw["bw_ratio"], "speed": raw["speed"],
        "nj_base": nj_base, "delta_edge": delta_edge, "delta_time": delta_time,
    })[export.COMPONENT_COLUMNS]
    return Finalized(invocations, components, norm, model.bounds)


def _check_out_dir(out_dir: Path, force: bool) -> None:
    if out_dir.exists() and not out_dir.is_dir():
        raise ConfigurationError(
            message=f"Output path exists and is not a directory: {out_dir}",
            error_code="out_dir_not_directory",
            details={"out_dir": str(out_dir)},
        )
    if out_dir.is_dir() and any(out_dir.iterdir()) and not force:
        raise ConfigurationError(
            message=f"Output directory is not empty: {out_dir} (use --force to replace it)",
            error_code="out_dir_not_empty",
            details={"out_dir": str(out_dir)},
        )


def _promote(staging: Path, out_dir: Path) -> None:
    if out_dir.exists():
        shutil.rmtree(out_dir)
    os.replace(staging, out_dir)


def run(cfg: SimConfig, gps_path: Optional[Union[str, Path]] = None,
        stations_path: Optional[Union[str, Path]] = None, force: bool = False) -> RunManifest:
    """Generate the full dataset into cfg.out_dir.

    Files are written to a staging directory next to out_dir and moved into
    place only when every stage succeeded.
    """
    out_dir = Path(cfg.out_dir)
    _check_out_dir(out_dir, force)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.staging.", dir=out_dir.parent))
    try:
        with ErrorHandler("load_inputs", "pipeline"):
            inputs = load_inputs(cfg, gps_path, stations_path)

        with ErrorHandler("make_entities", "pipeline"):
            servers = make_servers(inputs.stations, cfg, cfg.seed)
            services = make_services(cfg, cfg.seed)
            index = CoverageIndex(servers, cfg.earth_radius_m)

        with ErrorHandler("select_users", "pipeline"):
            aligned = align(group_by_vehicle(inputs.gps), cfg)
            profiles = {vid: (snaps, profile(snaps, index)) for vid, snaps in aligned.items()}
            screening = screen_vehicles(profiles, cfg)
            users = select_users(profiles, cfg)
        logger.info(f"Aligned {len(aligned)} vehicles, selected {cfg.n_u} users ({len(users)} snapshots)")

        with ErrorHandler("simulate", "pipeline"), tempfile.TemporaryDirectory(prefix="chestnut_spill_") as spill:
            simulation = simulate(cfg, users, servers, services, index, Path(spill))

        with ErrorHandler("finalize", "pipeline"):
            final = finalize(simulation.raw, cfg, cfg.n_u, len(servers), len(services))

        with ErrorHandler("emit", "pipeline"):
            export.write_frame(export.servers_frame(servers), staging / export.SERVERS_FILE)
            export.write_frame(export.services_frame(services), staging / export.SERVICES_FILE)
            export.write_frame(export.users_frame(users), staging / export.USERS_FILE)
            export.write_frame(export.loads_frame(simulation.load_rows), staging / export.LOADS_FILE)
            export.write_frame(export.invocations_frame(final.invocations), staging / export.INVOCATIONS_FILE)
            export.write_frame(final.components, staging / export.COMPONENTS_FILE)
            manifest = RunManifest(
                seed=cfg.seed,
                config=cfg.echo(),
                counts={
                    "users": cfg.n_u,
                    "servers": len(servers),
                    "services": len(services),
                    "snapshots": len(users),
                    "loads": len(simulation.load_rows),
                    "invocations": len(final.invocations),
                },
                normalization=final.normalization,
                dropped_rows={**inputs.dropped_rows,
                              "stations_outside_region": len(inputs.stations) - len(servers)},
                filtered_vehicles={
                    "aligned": len(aligned),
                    "stationary": screening.excluded_stationary,
                    "c_min": screening.excluded_c_min,
                },
                perturbation_bounds=final.perturbation_bounds,
            )
            export.write_manifest(manifest, staging / export.MANIFEST_FILE)
            emit_stats(staging)

        _promote(staging, out_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    logger.info(f"Dataset written to {out_dir}: {manifest.counts}")
    return manifest
