"""CSV layouts of the generated dataset and their writers."""
import json
from pathlib import Path
from typing import Dict, List, Sequence

import pandas as pd

from ..schemas.entities import EdgeServer, ServiceSpec
from ..schemas.invocation import RunManifest
from ..schemas.mobility import UserSnapshot

SERVERS_FILE = "servers.csv"
SERVICES_FILE = "services.csv"
USERS_FILE = "users.csv"
LOADS_FILE = "loads.csv"
INVOCATIONS_FILE = "invocations.csv"
COMPONENTS_FILE = "components.csv"
MANIFEST_FILE = "manifest.json"
STATS_DIR = "stats"

SERVER_COLUMNS = ["id", "lon", "lat", "radius", "computing", "storage", "bandwidth"]
SERVICE_COLUMNS = ["sid", "computing", "storage", "bandwidth"]
USER_COLUMNS = ["id", "timestamp", "lon", "lat", "speed", "direction"]
LOAD_COLUMNS = ["timestamp", "eid", "computing_load", "storage_load", "bandwidth_load"]
INVOCATION_COLUMNS = ["uid", "eid", "sid", "timestamp", "rt", "nj"]
COMPONENT_COLUMNS = [
    "pg_req", "uplink", "queueing", "processing", "downlink", "sd", "pg_rep", "rt_base",
    "trend", "dist_ratio", "dir_change", "bw_ratio", "speed", "nj_base", "delta_edge", "delta_time",
]

# Row counts reported in the manifest, by file
COUNTED_FILES = {
    "servers": SERVERS_FILE,
    "services": SERVICES_FILE,
    "snapshots": USERS_FILE,
    "loads": LOADS_FILE,
    "invocations": INVOCATIONS_FILE,
}

HEADERS: Dict[str, List[str]] = {
    SERVERS_FILE: SERVER_COLUMNS,
    SERVICES_FILE: SERVICE_COLUMNS,
    USERS_FILE: USER_COLUMNS,
    LOADS_FILE: LOAD_COLUMNS,
    INVOCATIONS_FILE: INVOCATION_COLUMNS,
    COMPONENTS_FILE: COMPONENT_COLUMNS,
}


def write_frame(df: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n", na_rep="nan")


def servers_frame(servers: Sequence[EdgeServer]) -> pd.DataFrame:
    return pd.DataFrame(
        [(e.id, e.pos.lon, e.pos.lat, e.radius_m, *e.supply) for e in servers],
        columns=SERVER_COLUMNS,
    )


def services_frame(services: Sequence[ServiceSpec]) -> pd.DataFrame:
    return pd.DataFrame([(s.sid, *s.prefs) for s in services], columns=SERVICE_COLUMNS)


def users_frame(users: Sequence[UserSnapshot]) -> pd.DataFrame:
    rows = sorted(
        ((u.uid, u.t, u.pos.lon, u.pos.lat, u.speed_kmh, u.direction_deg) for u in users),
        key=lambda r: (r[0], r[1]),
    )
    return pd.DataFrame(rows, columns=USER_COLUMNS)


def loads_frame(rows: Sequence[tuple]) -> pd.DataFrame:
    """Rows of (t, eid, rho_c, rho_s, rho_b); utilizations become percentages."""
    df = pd.DataFrame(list(rows), columns=LOAD_COLUMNS)
    for col in LOAD_COLUMNS[2:]:
        df[col] = (df[col].astype(float) * 100.0).map("{:.2f}".format)
    return df


def invocations_frame(df: pd.DataFrame) -> pd.DataFrame:
    out = df[INVOCATION_COLUMNS].copy()
    out["rt"] = out["rt"].map("{:.6f}".format)
    out["nj"] = out["nj"].map("{:.6f}".format)
    return out


def write_manifest(manifest: RunManifest, path: Path) -> None:
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def read_manifest(path: Path) -> RunManifest:
    return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
