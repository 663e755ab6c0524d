from pathlib import Path
from typing import Dict, List, Optional, Union
import logging

import numpy as np
import pandas as pd
from scipy import stats as sps

from ..schemas.geo import EARTH_RADIUS_M
from .export import (
    COMPONENTS_FILE,
    INVOCATIONS_FILE,
    LOADS_FILE,
    MANIFEST_FILE,
    SERVERS_FILE,
    SERVICES_FILE,
    STATS_DIR,
    USERS_FILE,
    read_manifest,
    write_frame,
)
from .geo import haversine_many

logger = logging.getLogger(__name__)

RT_FACTORS = ["pref_sum", "load_mean", "supply_sum", "server_users"]
NJ_FACTORS = ["dist_ratio", "dir_change", "speed", "trend", "bw_ratio", "server_users"]


class StatisticsService:
    """Dataset statistics: activity histograms, server coverage, QoS
    distributions and factor correlations.

    Works on the emitted tables (loads in percent, rt/nj as written), so a run
    and a later recompute from disk produce the same files.
    """

    def __init__(self, users: pd.DataFrame, servers: pd.DataFrame, services: pd.DataFrame,
                 loads: pd.DataFrame, invocations: pd.DataFrame, components: pd.DataFrame,
                 rt_bin_width: float = 0.05, nj_bin_width: float = 10.0,
                 earth_radius_m: float = EARTH_RADIUS_M) -> None:
        self.users = users
        self.servers = servers
        self.services = services
        self.loads = loads
        self.invocations = invocations
        self.components = components
        self.rt_bin_width = rt_bin_width
        self.nj_bin_width = nj_bin_width
        self.earth_radius_m = earth_radius_m
        self._coverage: Optional[pd.DataFrame] = None

    @classmethod
    def from_output_dir(cls, out_dir: Union[str, Path], rt_bin_width: Optional[float] = None,
                        nj_bin_width: Optional[float] = None) -> "StatisticsService":
        """Load a generated dataset; bin widths default to the run's own settings."""
        out_dir = Path(out_dir)
        config = read_manifest(out_dir / MANIFEST_FILE).config
        return cls(
            users=pd.read_csv(out_dir / USERS_FILE),
            servers=pd.read_csv(out_dir / SERVERS_FILE),
            services=pd.read_csv(out_dir / SERVICES_FILE),
            loads=pd.read_csv(out_dir / LOADS_FILE),
            invocations=pd.read_csv(out_dir / INVOCATIONS_FILE),
            components=pd.read_csv(out_dir / COMPONENTS_FILE),
            rt_bin_width=rt_bin_width or config.get("rt_bin_width", 0.05),
            nj_bin_width=nj_bin_width or config.get("nj_bin_width", 10.0),
            earth_radius_m=config.get("earth_radius_m", EARTH_RADIUS_M),
        )

    def timestamp_counts(self) -> pd.DataFrame:
        """Number of users per timestamp count."""
        per_user = self.users.groupby("id").size()
        hist = per_user.value_counts().sort_index()
        return pd.DataFrame({"timestamps": hist.index.astype(int), "users": hist.to_numpy(dtype=int)})

    def timestamp_intervals(self) -> pd.DataFrame:
        """Distribution of gaps between consecutive timestamps of the same user."""
        ordered = self.users.sort_values(["id", "timestamp"])
        gaps = ordered.groupby("id")["timestamp"].diff().dropna().astype(int)
        hist = gaps.value_counts().sort_index()
        return pd.DataFrame({"interval": hist.index.astype(int), "count": hist.to_numpy(dtype=int)})

    def server_coverage(self) -> pd.DataFrame:
        """Users covered by each server at each timestamp (every pair, zeros included)."""
        if self._coverage is not None:
            return self._coverage
        timestamps = sorted(self.loads["timestamp"].unique()) if len(self.loads) else []
        eids = self.servers["id"].to_numpy(dtype=int)
        s_lon = self.servers["lon"].to_numpy(dtype=float)
        s_lat = self.servers["lat"].to_numpy(dtype=float)
        radius = self.servers["radius"].to_numpy(dtype=float)
        by_t = {t: g for t, g in self.users.groupby("timestamp")}
        frames: List[pd.DataFrame] = []
        for t in timestamps:
            counts = np.zeros(len(eids), dtype=int)
            group = by_t.get(t)
            if group is not None and len(eids):
                d = haversine_many(group["lon"].to_numpy()[:, None], group["lat"].to_numpy()[:, None],
                                   s_lon[None, :], s_lat[None, :], self.earth_radius_m)
                counts = (d <= radius[None, :]).sum(axis=0).astype(int)
            frames.append(pd.DataFrame({"timestamp": int(t), "eid": eids, "users": counts}))
        self._coverage = (pd.concat(frames, ignore_index=True) if frames
                          else pd.DataFrame({"timestamp": [], "eid": [], "users": []}, dtype=int))
        return self._coverage

    @staticmethod
    def histogram(values: pd.Series, width: float) -> pd.DataFrame:
        """Counts in fixed-width bins [k*width, (k+1)*width)."""
        if len(values) == 0:
            return pd.DataFrame({"bin_low": [], "bin_high": [], "count": []})
        idx = np.floor(values.to_numpy(dtype=float) / width).astype(int)
        bins, counts = np.unique(idx, return_counts=True)
        return pd.DataFrame({
            "bin_low": np.round(bins * width, 10),
            "bin_high": np.round((bins + 1) * width, 10),
            "count": counts,
        })

    def factor_table(self) -> pd.DataFrame:
        """Per-invocation QoS values next to the factors they are expected to follow."""
        inv = self.invocations.reset_index(drop=True)
        table = pd.DataFrame({"rt": inv["rt"], "nj": inv["nj"]})
        services = self.services.set_index("sid")
        table["pref_sum"] = inv["sid"].map(services[["computing", "storage", "bandwidth"]].sum(axis=1))
        servers = self.servers.set_index("id")
        table["supply_sum"] = inv["eid"].map(servers[["computing", "storage", "bandwidth"]].sum(axis=1))
        loads = self.loads.set_index(["timestamp", "eid"])
        load_mean = loads[["computing_load", "storage_load", "bandwidth_load"]].mean(axis=1)
        keys = pd.MultiIndex.from_arrays([inv["timestamp"], inv["eid"]])
        table["load_mean"] = load_mean.reindex(keys).to_numpy()
        coverage = self.server_coverage().set_index(["timestamp", "eid"])["users"]
        table["server_users"] = coverage.reindex(keys).to_numpy()
        components = self.components.reset_index(drop=True)
        for col in ("dist_ratio", "dir_change", "speed", "trend", "bw_ratio"):
            table[col] = components[col]
        return table

    @staticmethod
    def _spearman(x: pd.Series, y: pd.Series) -> float:
        mask = x.notna() & y.notna()
        if mask.sum() < 2 or x[mask].nunique() < 2 or y[mask].nunique() < 2:
            return float("nan")
        return float(sps.spearmanr(x[mask], y[mask])[0])

    def correlations(self) -> pd.DataFrame:
        rows = []
        if len(self.invocations):
            table = self.factor_table()
            for target, factors in (("rt", RT_FACTORS), ("nj", NJ_FACTORS)):
                for factor in factors:
                    rows.append((target, factor, self._spearman(table[target], table[factor]), len(table)))
        return pd.DataFrame(rows, columns=["target", "factor", "spearman", "n"])

    def user_points(self) -> pd.DataFrame:
        """First known position of every user."""
        first = self.users.sort_values(["id", "timestamp"]).groupby("id", as_index=False).first()
        return first[["id", "lon", "lat"]].rename(columns={"id": "uid"})

    def server_points(self) -> pd.DataFrame:
        return self.servers[["id", "lon", "lat", "radius"]].rename(columns={"id": "eid"})

    def compute(self) -> Dict[str, pd.DataFrame]:
        return {
            "timestamp_counts.csv": self.timestamp_counts(),
            "timestamp_intervals.csv": self.timestamp_intervals(),
            "server_coverage.csv": self.server_coverage(),
            "rt_histogram.csv": self.histogram(self.invocations["rt"], self.rt_bin_width),
            "nj_histogram.csv": self.histogram(self.invocations["nj"], self.nj_bin_width),
            "correlations.csv": self.correlations(),
            "user_points.csv": self.user_points(),
            "server_points.csv": self.server_points(),
        }

    def write(self, stats_dir: Union[str, Path]) -> Dict[str, pd.DataFrame]:
        stats_dir = Path(stats_dir)
        tables = self.compute()
        for name, df in tables.items():
            write_frame(df, stats_dir / name)
        logger.info(f"Wrote {len(tables)} statistics tables to {stats_dir}")
        return tables


def emit_stats(out_dir: Union[str, Path], rt_bin_width: Optional[float] = None,
               nj_bin_width: Optional[float] = None) -> Dict[str, pd.DataFrame]:
    """(Re)compute every statistics table of a generated dataset into out_dir/stats."""
    out_dir = Path(out_dir)
    service = StatisticsService.from_output_dir(out_dir, rt_bin_width, nj_bin_width)
    return service.write(out_dir / STATS_DIR)
